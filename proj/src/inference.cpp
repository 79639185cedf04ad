#include "treekd/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "treekd/numformat.hpp"
#include "treekd/verbalizer.hpp"

namespace treekd {

namespace {

[[noreturn]] void grammar_error(const std::string& msg) {
  throw RuleError(RuleError::Kind::GrammarError, msg);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Rebuilds the sparse vector from a "name (xk), name (xk)" section.
FeatureVector parse_fg_section(const std::string& section, const FunctionalGroupLibrary& library) {
  FeatureVector vec;
  vec.dimension = library.size();
  if (section == "none") return vec;

  std::size_t start = 0;
  while (start < section.size()) {
    auto end = section.find(", ", start);
    if (end == std::string::npos) end = section.size();
    const std::string item = section.substr(start, end - start);
    const auto open = item.rfind(" (x");
    if (open == std::string::npos || item.back() != ')')
      grammar_error("malformed FG entry '" + item + "'");
    const std::string name = item.substr(0, open);
    const std::string count_text = item.substr(open + 3, item.size() - open - 4);
    const int index = library.index_of(name);
    if (index < 0)
      throw RuleError(RuleError::Kind::UnknownFGName, "FG name '" + name + "' not in library");
    int count = 0;
    try {
      count = std::stoi(count_text);
    } catch (const std::exception&) {
      grammar_error("bad FG count '" + count_text + "'");
    }
    vec.counts[index] = count;
    start = end == section.size() ? end : end + 2;
  }
  return vec;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// First whole-word occurrence of any needle, case-insensitive.
std::optional<std::pair<std::size_t, int>> find_label_word(const std::string& text) {
  static const std::pair<const char*, int> kWords[] = {
      {"positive", 1}, {"negative", 0}, {"yes", 1}, {"no", 0}};
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::optional<std::pair<std::size_t, int>> best;
  for (const auto& [word, value] : kWords) {
    const std::size_t len = std::char_traits<char>::length(word);
    std::size_t from = 0;
    while (true) {
      const auto at = lower.find(word, from);
      if (at == std::string::npos) break;
      const bool left_ok = at == 0 || !is_word_char(lower[at - 1]);
      const bool right_ok = at + len >= lower.size() || !is_word_char(lower[at + len]);
      if (left_ok && right_ok) {
        if (!best || at < best->first) best = {at, value};
        break;
      }
      from = at + 1;
    }
  }
  return best;
}

std::optional<double> find_number(const std::string& text, std::size_t from = 0) {
  for (std::size_t i = from; i < text.size(); ++i) {
    const char c = text[i];
    const bool starts = std::isdigit(static_cast<unsigned char>(c)) ||
                        ((c == '+' || c == '-' || c == '.') && i + 1 < text.size() &&
                         std::isdigit(static_cast<unsigned char>(text[i + 1])));
    if (!starts) continue;
    if (i > 0 && (is_word_char(text[i - 1]) || text[i - 1] == '.')) continue;
    char* end = nullptr;
    const double v = std::strtod(text.c_str() + i, &end);
    if (end != text.c_str() + i) return v;
  }
  return std::nullopt;
}

std::string call_with_retries(Predictor& predictor, const std::string& prompt,
                              const DecodingParams& params, const RetryPolicy& retry) {
  int backoff = retry.initial_backoff_ms;
  for (int attempt = 1;; ++attempt) {
    try {
      return predictor.complete(prompt, params);
    } catch (const InferenceError& e) {
      const bool transient = e.kind == InferenceError::Kind::BackendUnavailable ||
                             e.kind == InferenceError::Kind::Timeout;
      if (!transient || attempt >= retry.attempts) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
  }
}

EnsemblePrediction reduce_members(std::vector<Prediction> members, int n, int failures) {
  if (members.empty())
    throw InferenceError(InferenceError::Kind::AllMembersFailed,
                         "all " + std::to_string(n) + " ensemble members were unparseable");
  std::vector<double> values;
  values.reserve(members.size());
  for (const Prediction& m : members) values.push_back(m.parsed);
  EnsemblePrediction out;
  out.value = ensemble_mean(std::move(values));
  out.members = std::move(members);
  out.n = n;
  out.failures = failures;
  return out;
}

}  // namespace

std::string stub_oracle_complete(const std::string& prompt, const DecodingParams& params,
                                 const FunctionalGroupLibrary& library) {
  (void)params;  // deterministic regardless of decoding settings
  const auto lines = split_lines(prompt);

  const std::string fg_prefix = "Functional groups found: ";
  const std::string rule_header = "Predictive rule:";
  const std::string property_prefix = "Property: ";

  std::optional<std::size_t> fg_line, rule_start, rule_end;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!fg_line && lines[i].rfind(fg_prefix, 0) == 0) fg_line = i;
    if (!rule_start && lines[i] == rule_header) rule_start = i + 1;
    if (rule_start && !rule_end && i >= *rule_start && lines[i].rfind(property_prefix, 0) == 0)
      rule_end = i;
  }
  if (!fg_line) grammar_error("prompt has no functional-group section");
  if (!rule_start) grammar_error("prompt has no rule section");
  if (!rule_end) rule_end = lines.size();
  if (*rule_start >= *rule_end) grammar_error("prompt rule section is empty");

  const FeatureVector vec =
      parse_fg_section(lines[*fg_line].substr(fg_prefix.size()), library);
  const std::vector<std::string> rule_lines(lines.begin() + *rule_start,
                                            lines.begin() + *rule_end);
  const ExecutableRule rule = parse_rule(rule_lines);
  const RuleNode& leaf = execute_rule_leaf(rule, vec, library);

  if (leaf.classification_leaf) {
    const char* label = leaf.value > 0.5 ? "positive" : "negative";
    return std::string(label) + " (p=" + format_sig4(leaf.value) + ")";
  }
  return format_sig4(leaf.value);
}

std::string HttpPredictor::complete(const std::string& prompt, const DecodingParams& params) {
  // endpoint = scheme://host[:port]/path
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw InferenceError(InferenceError::Kind::BadConfig,
                         "endpoint '" + config_.endpoint + "' has no scheme");
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  const std::string origin =
      path_start == std::string::npos ? config_.endpoint : config_.endpoint.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = {{{"role", "user"}, {"content", prompt}}};
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_new_tokens;
  if (params.sample_seed) body["seed"] = *params.sample_seed;

  httplib::Client client(origin);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write)
      throw InferenceError(InferenceError::Kind::Timeout,
                           "request to " + config_.endpoint + " timed out");
    throw InferenceError(InferenceError::Kind::BackendUnavailable,
                         "cannot reach " + config_.endpoint + ": " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300)
    throw InferenceError(InferenceError::Kind::BackendUnavailable,
                         config_.endpoint + " returned HTTP " + std::to_string(res->status));

  try {
    const nlohmann::json j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InferenceError(InferenceError::Kind::BackendUnavailable,
                         "malformed response from " + config_.endpoint + ": " + e.what());
  }
}

std::optional<double> try_parse_response(const std::string& text, TaskKind task) {
  if (task == TaskKind::Regression) return find_number(text);
  const auto word = find_label_word(text);
  if (!word) return std::nullopt;
  const auto p = text.find("p=");
  if (p != std::string::npos) {
    const auto frac = find_number(text, p + 2);
    if (frac) return frac;
  }
  return static_cast<double>(word->second);
}

double parse_response(const std::string& text, TaskKind task) {
  const auto v = try_parse_response(text, task);
  if (!v)
    throw InferenceError(InferenceError::Kind::Unparseable,
                         "cannot parse prediction from '" + text + "'");
  return *v;
}

EnsemblePrediction rule_consistency(const MoleculeRecord& record, const FeatureVector& features,
                                    RandomForest& forest, const FunctionalGroupLibrary& library,
                                    const PropertySpec& spec, Predictor& predictor,
                                    const DecodingParams& params, int ensemble_n,
                                    const RetryPolicy& retry) {
  if (ensemble_n < 1 || ensemble_n > forest.size())
    throw InferenceError(InferenceError::Kind::BadConfig,
                         "ensemble size " + std::to_string(ensemble_n) +
                             " exceeds forest size " + std::to_string(forest.size()));
  std::vector<Prediction> members;
  int failures = 0;
  for (int k = 0; k < ensemble_n; ++k) {
    const RuleText rule = verbalize_rule(forest.trees[k], library);
    const Prompt prompt = build_prompt(record, features, rule, library, spec);
    const std::string text = call_with_retries(predictor, prompt.text, params, retry);
    if (const auto parsed = try_parse_response(text, spec.task)) {
      members.push_back(Prediction{text, *parsed, k});
    } else {
      ++failures;
    }
  }
  return reduce_members(std::move(members), ensemble_n, failures);
}

EnsemblePrediction self_consistency(const Prompt& prompt, Predictor& predictor,
                                    const DecodingParams& params, int n, TaskKind task,
                                    const RetryPolicy& retry) {
  if (!(params.temperature > 0.0))
    throw InferenceError(InferenceError::Kind::BadConfig,
                         "self-consistency requires temperature > 0");
  if (n < 1)
    throw InferenceError(InferenceError::Kind::BadConfig, "ensemble size must be at least 1");
  const std::uint64_t base_seed = params.sample_seed.value_or(0);
  std::vector<Prediction> members;
  int failures = 0;
  for (int k = 0; k < n; ++k) {
    DecodingParams member_params = params;
    member_params.sample_seed = base_seed + static_cast<std::uint64_t>(k);
    const std::string text = call_with_retries(predictor, prompt.text, member_params, retry);
    if (const auto parsed = try_parse_response(text, task)) {
      members.push_back(Prediction{text, *parsed, k});
    } else {
      ++failures;
    }
  }
  return reduce_members(std::move(members), n, failures);
}

std::vector<EnsemblePrediction> rule_consistency_batch(
    const std::vector<MoleculeRecord>& records, const std::vector<FeatureVector>& features,
    RandomForest& forest, const FunctionalGroupLibrary& library, const PropertySpec& spec,
    Predictor& predictor, const DecodingParams& params, int ensemble_n, const RetryPolicy& retry,
    int concurrency) {
  if (ensemble_n < 1 || ensemble_n > forest.size())
    throw InferenceError(InferenceError::Kind::BadConfig,
                         "ensemble size " + std::to_string(ensemble_n) +
                             " exceeds forest size " + std::to_string(forest.size()));

  const std::int64_t n_records = static_cast<std::int64_t>(records.size());
  std::vector<std::vector<Prediction>> members(records.size());
  std::vector<int> failures(records.size(), 0);

  // Backend errors from worker threads are stashed and rethrown; OpenMP
  // regions cannot propagate exceptions.
  std::atomic<bool> failed{false};
  std::exception_ptr error;

  for (int k = 0; k < ensemble_n; ++k) {
    const RuleText rule = verbalize_rule(forest.trees[k], library);
    const bool parallel = predictor.concurrent_safe() && concurrency > 1;
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, concurrency)) if (parallel)
    for (std::int64_t i = 0; i < n_records; ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        const Prompt prompt = build_prompt(records[i], features[i], rule, library, spec);
        const std::string text = call_with_retries(predictor, prompt.text, params, retry);
        if (const auto parsed = try_parse_response(text, spec.task)) {
          members[i].push_back(Prediction{text, *parsed, k});
        } else {
          ++failures[i];
        }
      } catch (...) {
#pragma omp critical
        {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    }
    if (failed.load()) std::rethrow_exception(error);
  }

  std::vector<EnsemblePrediction> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    out.push_back(reduce_members(std::move(members[i]), ensemble_n, failures[i]));
  return out;
}

}  // namespace treekd
