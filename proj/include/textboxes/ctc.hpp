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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace textboxes {

// T x (|alphabet| + 1) per-frame log-probabilities; the last column is the
// CTC blank. Every row must exponentiate to a distribution (within 1e-9).
class LogProbMatrix {
 public:
  LogProbMatrix(std::string alphabet, int frames, std::vector<double> values);

  // Row-normalizes exp(logits) per frame.
  static LogProbMatrix from_logits(std::string alphabet, int frames,
                                   const std::vector<double>& logits);
  static LogProbMatrix uniform(std::string alphabet, int frames);

  const std::string& alphabet() const { return alphabet_; }
  int frames() const { return frames_; }
  int symbols() const { return static_cast<int>(alphabet_.size()) + 1; }
  int blank() const { return static_cast<int>(alphabet_.size()); }
  double at(int t, int k) const {
    return values_[static_cast<std::size_t>(t) * symbols() + k];
  }
  const std::vector<double>& values() const { return values_; }

  // Index of `c` in the alphabet, or -1.
  int symbol_of(char c) const;

  friend bool operator==(const LogProbMatrix&, const LogProbMatrix&) = default;

 private:
  std::string alphabet_;
  int frames_ = 0;
  std::vector<double> values_;
};

// log p(word | m) by the CTC forward recursion over the blank-interleaved
// label sequence, in log space. -inf when the word cannot fit in T frames
// (T < |word| + number of adjacent repeats). Throws InputError for an empty
// word or characters outside the alphabet.
double ctc_word_logprob(const LogProbMatrix& m, std::string_view word);

class Lexicon {
 public:
  // Throws InputError on empty or duplicate words.
  explicit Lexicon(std::vector<std::string> words, std::string name = "lexicon");

  const std::vector<std::string>& words() const { return words_; }
  const std::string& name() const { return name_; }
  std::size_t size() const { return words_.size(); }
  std::size_t max_word_length() const;

 private:
  std::vector<std::string> words_;  // sorted
  std::string name_;
};

// UTF-8, one word per line; blank lines skipped, duplicates merged.
Lexicon read_lexicon(const std::filesystem::path& path);
void write_lexicon(const std::filesystem::path& path, const Lexicon& lexicon);

struct LexiconMatch {
  double score = 0.0;  // max over words of p(word | m), in [0, 1]
  std::string word;    // argmax; ties go to the lexicographically smallest
};

LexiconMatch lexicon_score(const LogProbMatrix& m, const Lexicon& lexicon);

// Recognizer-exchange record: {"candidate_id", "T", "alphabet", "logprobs"}.
struct RecognitionRecord {
  std::string candidate_id;
  LogProbMatrix logprobs;
  friend bool operator==(const RecognitionRecord&, const RecognitionRecord&) = default;
};

std::string recognition_record_to_json(const RecognitionRecord& record);
RecognitionRecord recognition_record_from_json(const std::string& line,
                                               const std::string& where);
std::vector<RecognitionRecord> read_recognition_records(
    const std::filesystem::path& path);

}  // namespace textboxes
