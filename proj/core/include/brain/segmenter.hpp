#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "brain/corpus.hpp"

namespace brain {

enum class SegmentKind { method, constructor, interface_decl, enum_decl, fallback_whole_file };

std::string_view to_string(SegmentKind kind);

/// A member-level unit of a Java document, the unit the relevance oracle judges.
struct CodeSegment {
    std::string doc_id;
    SegmentKind kind = SegmentKind::method;
    std::string name;
    std::string body_text;
    int start_line = 1;  // 1-based, inclusive
    int end_line = 1;
    bool truncated = false;
};

struct SegmenterOptions {
    /// Longer segments are cut here and get kTruncationMarker appended.
    std::size_t max_segment_chars = 24000;
};

inline constexpr std::string_view kTruncationMarker = "\n// ... [segment truncated]";

/// Splits a document into method, constructor, interface and enum segments.
///
/// Nested declarations (inner classes, anonymous classes, local classes,
/// enum constant bodies) contribute their own segments. A document that
/// cannot be parsed, or that contains none of these members, yields one
/// fallback_whole_file segment so it stays eligible for judgment.
std::vector<CodeSegment> segment_document(const SourceDocument& doc,
                                          const SegmenterOptions& options = {});

struct SignatureSet {
    std::string doc_id;
    std::vector<std::string> signatures;
};

/// Class, method and field declaration headers in document order: no bodies,
/// initializers, comments or annotations. Whitespace collapses to single spaces.
/// An unparseable document gives an empty set.
SignatureSet extract_signatures(const SourceDocument& doc);

/// One code-vocabulary token stream per signature; empty phrases are dropped.
std::vector<TokenStream> signatures_to_phrases(const SignatureSet& signatures);

}  // namespace brain
