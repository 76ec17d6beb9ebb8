package com.authsvc.i18n;

/* locale plural translation bundle fallback
 * locale plural translation bundle fallback */
public class LocalePluralRules {
    private int localeTotal;
    private int pluralTotal;
    private int translationTotal;
    private int bundleTotal;
    private int fallbackTotal;

    public int localePlural(int locale) {
        int plural = locale + localeTotal;
        return plural * pluralTotal;
    }

    public int translationBundle(int translation) {
        int bundle = translation + translationTotal;
        return bundle * bundleTotal;
    }

    public int fallbackLocale(int fallback) {
        int locale = fallback + fallbackTotal;
        return locale * localeTotal;
    }

    public int pluralTranslation(int plural) {
        int translation = plural + pluralTotal;
        return translation * translationTotal;
    }
}
