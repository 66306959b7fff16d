#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safetriage {

enum class Source { AmazonReview, SaferProducts, CpscRecall, EuRapidAlert };
enum class Label { MentionsSafetyIssue, NoSafetyIssue, Unlabeled };

using Date = std::chrono::year_month_day;

/// CLI spelling: amazon | saferproducts | cpsc | eu.
std::string_view to_string(Source s);
Source parse_source(std::string_view name);
std::string_view to_string(Label l);
/// Accepts the canonical names plus yes/no, positive/negative, true/false, 1/0.
std::optional<Label> parse_label(std::string_view name);

/// Strict ISO-8601 calendar date (YYYY-MM-DD). Throws ArgumentError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// One review, complaint, or recall text.
struct Document {
  std::string id;
  std::string text;
  Source source = Source::AmazonReview;
  std::optional<int> star_rating;
  std::optional<std::string> product_upc;
  std::optional<Date> review_date;
  Label label = Label::Unlabeled;

  bool operator==(const Document&) const = default;
};

struct RecallRecord {
  std::string recall_id;
  std::vector<std::string> upcs;
  Date recall_date;
  std::string description;
};

/// Manual labelling rules for deciding whether a review mentions a safety
/// issue.
struct LabelingRule {
  std::string rule_text;
  bool mentions_safety_issue;
};
const std::vector<LabelingRule>& labeling_rules();

template <typename T>
struct LoadResult {
  std::vector<T> records;
  std::size_t skipped = 0;  // malformed lines
};

/// Reads line-delimited JSON records {id, text, stars?, upc?, date?, label?}.
/// Non-Amazon sources are forced to label MentionsSafetyIssue and one star.
/// Throws IngestError when unreadable, EmptyDatasetError when no line parses.
LoadResult<Document> load_documents(const std::filesystem::path& path, Source source);

/// Reads a normalized corpus file (as written by write_documents), where every
/// record carries its own `source` field. Same source rules as load_documents.
LoadResult<Document> load_corpus(const std::filesystem::path& path);

/// Parses one record line. Returns nullopt for malformed input. When
/// `forced_source` is absent the record's `source` field is used.
std::optional<Document> parse_document_line(std::string_view line, std::optional<Source> forced_source);

void write_documents(std::ostream& out, const std::vector<Document>& docs);
void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Reads line-delimited {recall_id, upcs, recall_date, description}.
LoadResult<RecallRecord> load_recalls(const std::filesystem::path& path);

struct JoinResult {
  std::vector<Document> documents;
  std::size_t missing_upc_or_date = 0;
  std::size_t unmatched = 0;  // had UPC and date but no recall before that date
};

/// Reviews whose UPC belongs to some recall dated strictly after the review.
JoinResult join_pre_recall(const std::vector<Document>& reviews, const std::vector<RecallRecord>& recalls);

/// Uniform random subset of size n (all docs when there are at most n),
/// returned in input order. Throws ArgumentError for n == 0.
std::vector<Document> downsample(const std::vector<Document>& docs, std::size_t n, std::uint64_t seed);

struct MergeSummary {
  std::map<Source, std::size_t> per_source;
  std::map<Label, std::size_t> per_label;
};

struct MergeResult {
  std::vector<Document> documents;
  MergeSummary summary;
};

/// Concatenates the parts. Throws MergeError naming the first duplicate id.
MergeResult merge_training_set(const std::vector<std::vector<Document>>& parts);

MergeSummary summarize(const std::vector<Document>& docs);

}  // namespace safetriage
