#include "brain/segmenter.hpp"

#include "java_parser.hpp"
#include "log.hpp"

namespace brain {

std::string_view to_string(SegmentKind kind) {
    switch (kind) {
        case SegmentKind::method: return "method";
        case SegmentKind::constructor: return "constructor";
        case SegmentKind::interface_decl: return "interface";
        case SegmentKind::enum_decl: return "enum";
        case SegmentKind::fallback_whole_file: return "fallback_whole_file";
    }
    return "unknown";
}

namespace {

int count_lines(std::string_view text) {
    int lines = 1;
    for (char c : text) {
        if (c == '\n') ++lines;
    }
    if (!text.empty() && text.back() == '\n') --lines;
    return lines;
}

// Cuts at a UTF-8 character boundary at or before limit.
std::string truncate_utf8(std::string_view text, std::size_t limit) {
    std::size_t cut = std::min(limit, text.size());
    while (cut > 0 && cut < text.size() && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    return std::string(text.substr(0, cut));
}

void apply_budget(CodeSegment& segment, std::size_t budget) {
    if (budget == 0 || segment.body_text.size() <= budget) return;
    segment.body_text = truncate_utf8(segment.body_text, budget);
    segment.body_text += kTruncationMarker;
    segment.truncated = true;
}

CodeSegment whole_file(const SourceDocument& doc) {
    CodeSegment segment;
    segment.doc_id = doc.doc_id;
    segment.kind = SegmentKind::fallback_whole_file;
    const auto slash = doc.path.find_last_of('/');
    segment.name = slash == std::string::npos ? doc.path : doc.path.substr(slash + 1);
    segment.body_text = doc.content;
    segment.start_line = 1;
    segment.end_line = count_lines(doc.content);
    return segment;
}

}  // namespace

std::vector<CodeSegment> segment_document(const SourceDocument& doc, const SegmenterOptions& options) {
    std::vector<CodeSegment> segments;
    const detail::JavaParse parsed = detail::parse_java(doc.content);
    if (!parsed.ok) {
        detail::log().debug("{}: parse failed ({}); using whole file", doc.path, parsed.error);
    } else {
        for (const auto& decl : parsed.decls) {
            SegmentKind kind;
            if (decl.kind == detail::DeclKind::method) {
                kind = SegmentKind::method;
            } else if (decl.kind == detail::DeclKind::constructor) {
                kind = SegmentKind::constructor;
            } else if (decl.kind == detail::DeclKind::type &&
                       (decl.type_keyword == "interface" || decl.type_keyword == "@interface")) {
                kind = SegmentKind::interface_decl;
            } else if (decl.kind == detail::DeclKind::type && decl.type_keyword == "enum") {
                kind = SegmentKind::enum_decl;
            } else {
                continue;
            }
            const auto& first = parsed.tokens[decl.first_token];
            const auto& last = parsed.tokens[decl.last_token];
            CodeSegment segment;
            segment.doc_id = doc.doc_id;
            segment.kind = kind;
            segment.name = decl.name;
            segment.body_text = doc.content.substr(first.begin, last.end - first.begin);
            segment.start_line = first.line;
            segment.end_line = last.line;
            segments.push_back(std::move(segment));
        }
    }
    if (segments.empty()) segments.push_back(whole_file(doc));
    for (auto& segment : segments) apply_budget(segment, options.max_segment_chars);
    return segments;
}

SignatureSet extract_signatures(const SourceDocument& doc) {
    SignatureSet set;
    set.doc_id = doc.doc_id;
    const detail::JavaParse parsed = detail::parse_java(doc.content);
    if (!parsed.ok) {
        detail::log().debug("{}: parse failed ({}); no signatures", doc.path, parsed.error);
        return set;
    }
    for (const auto& decl : parsed.decls) {
        if (!decl.signature.empty()) set.signatures.push_back(decl.signature);
    }
    return set;
}

std::vector<TokenStream> signatures_to_phrases(const SignatureSet& signatures) {
    std::vector<TokenStream> phrases;
    phrases.reserve(signatures.signatures.size());
    for (const auto& signature : signatures.signatures) {
        TokenStream phrase = preprocess(signature, Vocabulary::code);
        if (!phrase.empty()) phrases.push_back(std::move(phrase));
    }
    return phrases;
}

}  // namespace brain
