// Copyright 2026 The TextBoxes-Desk Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "textboxes/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"
#include "textboxes/errors.hpp"

namespace textboxes {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

void check_alphabet(const std::string& alphabet) {
  if (alphabet.empty()) throw InputError("alphabet must be non-empty");
  std::set<char> seen(alphabet.begin(), alphabet.end());
  if (seen.size() != alphabet.size()) throw InputError("alphabet has duplicates");
}

}  // namespace

LogProbMatrix::LogProbMatrix(std::string alphabet, int frames,
                             std::vector<double> values)
    : alphabet_(std::move(alphabet)), frames_(frames), values_(std::move(values)) {
  check_alphabet(alphabet_);
  if (frames_ < 1) throw InputError("LogProbMatrix needs at least one frame");
  const std::size_t expected = static_cast<std::size_t>(frames_) * symbols();
  if (values_.size() != expected) {
    throw InputError("LogProbMatrix: expected " + std::to_string(expected) +
                     " values, got " + std::to_string(values_.size()));
  }
  for (int t = 0; t < frames_; ++t) {
    double total = 0.0;
    for (int k = 0; k < symbols(); ++k) {
      const double v = at(t, k);
      if (std::isnan(v) || v > 0.0) {
        throw InputError("LogProbMatrix: frame " + std::to_string(t) +
                         " has an invalid log-probability");
      }
      total += std::exp(v);
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw InputError("LogProbMatrix: frame " + std::to_string(t) +
                       " probabilities sum to " + std::to_string(total));
    }
  }
}

LogProbMatrix LogProbMatrix::from_logits(std::string alphabet, int frames,
                                         const std::vector<double>& logits) {
  const std::size_t k = alphabet.size() + 1;
  if (frames < 1 || logits.size() != static_cast<std::size_t>(frames) * k) {
    throw InputError("from_logits: size mismatch");
  }
  std::vector<double> values(logits.size());
  for (int t = 0; t < frames; ++t) {
    const double* row = logits.data() + static_cast<std::size_t>(t) * k;
    const double m = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - m);
    const double lse = m + std::log(z);
    for (std::size_t j = 0; j < k; ++j) values[t * k + j] = row[j] - lse;
  }
  return LogProbMatrix(std::move(alphabet), frames, std::move(values));
}

LogProbMatrix LogProbMatrix::uniform(std::string alphabet, int frames) {
  const std::size_t k = alphabet.size() + 1;
  std::vector<double> values(static_cast<std::size_t>(std::max(frames, 0)) * k,
                             -std::log(static_cast<double>(k)));
  return LogProbMatrix(std::move(alphabet), frames, std::move(values));
}

int LogProbMatrix::symbol_of(char c) const {
  const auto pos = alphabet_.find(c);
  return pos == std::string::npos ? -1 : static_cast<int>(pos);
}

double ctc_word_logprob(const LogProbMatrix& m, std::string_view word) {
  if (word.empty()) throw InputError("ctc_word_logprob: empty word");
  std::vector<int> labels;
  for (char c : word) {
    const int s = m.symbol_of(c);
    if (s < 0) {
      throw InputError(std::string("ctc_word_logprob: character '") + c +
                       "' not in alphabet");
    }
    labels.push_back(s);
  }
  int repeats = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) repeats += labels[i] == labels[i - 1];
  const int frames = m.frames();
  if (frames < static_cast<int>(labels.size()) + repeats) return kNegInf;

  // Extended sequence: blank, l1, blank, l2, ..., blank.
  const int blank = m.blank();
  const int ext = 2 * static_cast<int>(labels.size()) + 1;
  auto symbol = [&](int s) { return s % 2 == 0 ? blank : labels[s / 2]; };

  std::vector<double> alpha(ext, kNegInf), next(ext, kNegInf);
  alpha[0] = m.at(0, blank);
  alpha[1] = m.at(0, labels[0]);
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < ext; ++s) {
      double acc = alpha[s];
      if (s >= 1) acc = log_add(acc, alpha[s - 1]);
      if (s >= 2 && symbol(s) != blank && symbol(s) != symbol(s - 2)) {
        acc = log_add(acc, alpha[s - 2]);
      }
      next[s] = acc == kNegInf ? kNegInf : acc + m.at(t, symbol(s));
    }
    std::swap(alpha, next);
  }
  return log_add(alpha[ext - 1], alpha[ext - 2]);
}

Lexicon::Lexicon(std::vector<std::string> words, std::string name)
    : words_(std::move(words)), name_(std::move(name)) {
  if (words_.empty()) throw InputError("lexicon '" + name_ + "' is empty");
  std::sort(words_.begin(), words_.end());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw InputError("lexicon contains an empty word");
    if (i > 0 && words_[i] == words_[i - 1]) {
      throw InputError("lexicon contains duplicate word '" + words_[i] + "'");
    }
  }
}

std::size_t Lexicon::max_word_length() const {
  std::size_t m = 0;
  for (const std::string& w : words_) m = std::max(m, w.size());
  return m;
}

Lexicon read_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open lexicon");
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.pop_back();
    }
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    words.insert(line.substr(start));
  }
  if (words.empty()) throw ParseError(path.string() + ": lexicon is empty");
  return Lexicon({words.begin(), words.end()}, path.stem().string());
}

void write_lexicon(const std::filesystem::path& path, const Lexicon& lexicon) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  for (const std::string& w : lexicon.words()) out << w << '\n';
}

LexiconMatch lexicon_score(const LogProbMatrix& m, const Lexicon& lexicon) {
  double best = kNegInf;
  const std::string* best_word = &lexicon.words().front();
  // words() is sorted, so a strict comparison keeps the smallest on ties.
  for (const std::string& w : lexicon.words()) {
    const double lp = ctc_word_logprob(m, w);
    if (lp > best) {
      best = lp;
      best_word = &w;
    }
  }
  return {std::exp(best), *best_word};
}

std::string recognition_record_to_json(const RecognitionRecord& record) {
  const LogProbMatrix& m = record.logprobs;
  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < m.frames(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < m.symbols(); ++k) row.push_back(m.at(t, k));
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"candidate_id", record.candidate_id},
                        {"T", m.frames()},
                        {"alphabet", m.alphabet()},
                        {"logprobs", std::move(rows)}}
      .dump();
}

RecognitionRecord recognition_record_from_json(const std::string& line,
                                               const std::string& where) {
  try {
    const nlohmann::json j = nlohmann::json::parse(line);
    const std::string id = j.at("candidate_id").get<std::string>();
    const int frames = j.at("T").get<int>();
    std::string alphabet = j.at("alphabet").get<std::string>();
    const auto& rows = j.at("logprobs");
    if (frames < 1 || !rows.is_array() || rows.size() != static_cast<std::size_t>(frames)) {
      throw ParseError(where + ": logprobs must have T rows");
    }
    std::vector<double> values;
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != alphabet.size() + 1) {
        throw ParseError(where + ": each logprobs row needs |alphabet|+1 entries");
      }
      for (const auto& v : row) values.push_back(v.get<double>());
    }
    return {id, LogProbMatrix(std::move(alphabet), frames, std::move(values))};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  } catch (const InputError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

std::vector<RecognitionRecord> read_recognition_records(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::vector<RecognitionRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    records.push_back(recognition_record_from_json(
        line, path.string() + ":" + std::to_string(line_no)));
  }
  return records;
}

}  // namespace textboxes
