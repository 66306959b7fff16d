#include "safetriage/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "safetriage/error.hpp"
#include "safetriage/rng.hpp"

namespace safetriage {

using nlohmann::json;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::AmazonReview: return "amazon";
    case Source::SaferProducts: return "saferproducts";
    case Source::CpscRecall: return "cpsc";
    case Source::EuRapidAlert: return "eu";
  }
  return "?";
}

Source parse_source(std::string_view name) {
  if (name == "amazon") return Source::AmazonReview;
  if (name == "saferproducts") return Source::SaferProducts;
  if (name == "cpsc") return Source::CpscRecall;
  if (name == "eu") return Source::EuRapidAlert;
  throw ArgumentError("unknown source '" + std::string(name) + "' (amazon|saferproducts|cpsc|eu)");
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::MentionsSafetyIssue: return "MentionsSafetyIssue";
    case Label::NoSafetyIssue: return "NoSafetyIssue";
    case Label::Unlabeled: return "Unlabeled";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "mentionssafetyissue" || s == "yes" || s == "positive" || s == "true" || s == "1") {
    return Label::MentionsSafetyIssue;
  }
  if (s == "nosafetyissue" || s == "no" || s == "negative" || s == "false" || s == "0") return Label::NoSafetyIssue;
  if (s == "unlabeled" || s.empty()) return Label::Unlabeled;
  return std::nullopt;
}

Date parse_date(std::string_view text) {
  auto bad = [&] { return ArgumentError("invalid ISO-8601 date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::string_view part, auto& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || p != part.data() + part.size()) throw bad();
  };
  parse(text.substr(0, 4), y);
  parse(text.substr(5, 2), m);
  parse(text.substr(8, 2), d);
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw bad();
  return date;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

const std::vector<LabelingRule>& labeling_rules() {
  static const std::vector<LabelingRule> rules{
      {"Person harmed during correct use of the product", true},
      {"Person harmed during incorrect use of the product", true},
      {"Harm could have occurred, but was avoided through an action by the user", true},
      {"Different product (not the one the review is about) has a safety issue", true},
      {"Potential harm is suggested, with no evidence", false},
  };
  return rules;
}

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<std::string> string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw std::invalid_argument(key);
}

}  // namespace

std::optional<Document> parse_document_line(std::string_view line, std::optional<Source> forced_source) {
  if (blank(line)) return std::nullopt;
  try {
    const json j = json::parse(line);
    if (!j.is_object()) return std::nullopt;
    Document doc;
    auto id = string_field(j, "id");
    auto text = string_field(j, "text");
    if (!id || id->empty() || !text || blank(*text)) return std::nullopt;
    doc.id = std::move(*id);
    doc.text = std::move(*text);

    if (forced_source) {
      doc.source = *forced_source;
    } else {
      auto src = string_field(j, "source");
      if (!src) return std::nullopt;
      doc.source = parse_source(*src);
    }

    if (auto it = j.find("stars"); it != j.end() && !it->is_null()) {
      if (!it->is_number()) return std::nullopt;
      const double stars = it->get<double>();
      if (stars != static_cast<int>(stars) || stars < 1 || stars > 5) return std::nullopt;
      doc.star_rating = static_cast<int>(stars);
    }
    doc.product_upc = string_field(j, "upc");
    if (auto date = string_field(j, "date")) doc.review_date = parse_date(*date);
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
      std::optional<Label> label;
      if (it->is_string()) label = parse_label(it->get<std::string>());
      else if (it->is_boolean()) label = it->get<bool>() ? Label::MentionsSafetyIssue : Label::NoSafetyIssue;
      else if (it->is_number_integer()) label = parse_label(std::to_string(it->get<long long>()));
      if (!label) return std::nullopt;
      doc.label = *label;
    }

    if (doc.source != Source::AmazonReview) {
      doc.label = Label::MentionsSafetyIssue;
      doc.star_rating = 1;
    }
    return doc;
  } catch (const json::exception&) {
    return std::nullopt;
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  } catch (const ArgumentError&) {
    return std::nullopt;
  }
}

namespace {

LoadResult<Document> load_lines(const std::filesystem::path& path, std::optional<Source> source) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read " + path.string());
  LoadResult<Document> result;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    if (auto doc = parse_document_line(line, source)) {
      result.records.push_back(std::move(*doc));
    } else {
      ++result.skipped;
    }
  }
  if (in.bad()) throw IngestError("read error on " + path.string());
  if (result.records.empty()) throw EmptyDatasetError("no valid records in " + path.string());
  return result;
}

}  // namespace

LoadResult<Document> load_documents(const std::filesystem::path& path, Source source) {
  return load_lines(path, source);
}

LoadResult<Document> load_corpus(const std::filesystem::path& path) { return load_lines(path, std::nullopt); }

void write_documents(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) {
    json j{{"id", d.id}, {"text", d.text}, {"source", to_string(d.source)}};
    if (d.star_rating) j["stars"] = *d.star_rating;
    if (d.product_upc) j["upc"] = *d.product_upc;
    if (d.review_date) j["date"] = format_date(*d.review_date);
    if (d.label != Label::Unlabeled) j["label"] = to_string(d.label);
    out << j.dump() << '\n';
  }
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write " + path.string());
  write_documents(out, docs);
}

LoadResult<RecallRecord> load_recalls(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read " + path.string());
  LoadResult<RecallRecord> result;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    try {
      const json j = json::parse(line);
      RecallRecord r;
      r.recall_id = j.at("recall_id").is_string() ? j.at("recall_id").get<std::string>()
                                                  : std::to_string(j.at("recall_id").get<long long>());
      for (const auto& u : j.value("upcs", json::array())) r.upcs.push_back(u.get<std::string>());
      r.recall_date = parse_date(j.at("recall_date").get<std::string>());
      r.description = j.value("description", "");
      result.records.push_back(std::move(r));
    } catch (const json::exception&) {
      ++result.skipped;
    } catch (const ArgumentError&) {
      ++result.skipped;
    }
  }
  if (result.records.empty()) throw EmptyDatasetError("no valid recall records in " + path.string());
  return result;
}

JoinResult join_pre_recall(const std::vector<Document>& reviews, const std::vector<RecallRecord>& recalls) {
  // Latest recall date per UPC decides: a review qualifies if it predates any
  // recall of its product.
  std::unordered_map<std::string, std::chrono::sys_days> latest;
  for (const auto& r : recalls) {
    const std::chrono::sys_days day{r.recall_date};
    for (const auto& upc : r.upcs) {
      auto [it, inserted] = latest.emplace(upc, day);
      if (!inserted && day > it->second) it->second = day;
    }
  }
  JoinResult out;
  for (const auto& doc : reviews) {
    if (!doc.product_upc || !doc.review_date) {
      ++out.missing_upc_or_date;
      continue;
    }
    auto it = latest.find(*doc.product_upc);
    if (it != latest.end() && std::chrono::sys_days{*doc.review_date} < it->second) {
      out.documents.push_back(doc);
    } else {
      ++out.unmatched;
    }
  }
  return out;
}

std::vector<Document> downsample(const std::vector<Document>& docs, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("downsample size must be at least 1");
  if (docs.size() <= n) return docs;
  std::vector<std::size_t> idx(docs.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // partial Fisher-Yates: the first n slots become a uniform sample
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Document> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(docs[i]);
  return out;
}

MergeSummary summarize(const std::vector<Document>& docs) {
  MergeSummary s;
  for (const auto& d : docs) {
    ++s.per_source[d.source];
    ++s.per_label[d.label];
  }
  return s;
}

MergeResult merge_training_set(const std::vector<std::vector<Document>>& parts) {
  MergeResult out;
  std::unordered_set<std::string> seen;
  for (const auto& part : parts) {
    for (const auto& d : part) {
      if (!seen.insert(d.id).second) throw MergeError("duplicate document id '" + d.id + "'");
      out.documents.push_back(d);
    }
  }
  out.summary = summarize(out.documents);
  return out;
}

}  // namespace safetriage
