// anchor_align/textprep.h

// Copyright 2026  The anchor-align Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ANCHOR_ALIGN_TEXTPREP_H_
#define ANCHOR_ALIGN_TEXTPREP_H_

#include <filesystem>
#include <string>
#include <vector>

#include "anchor_align/posterior_io.h"

namespace anchor_align {

struct Utterance {
  int utt_index = 0;
  std::string text;  // normalized, words joined by single spaces
  int word_count = 0;
  double est_duration_s = 0.0;
};

struct TokenBoundary {
  int utt_index;
  int first_token;  // inclusive positions into TokenSequence::tokens
  int last_token;
};

// Character tokens of one or more utterances joined by separators. The
// virtual start token and the final blank are not stored in `tokens` but are
// counted in num_columns().
struct TokenSequence {
  std::vector<int> tokens;
  int blank = 0;  // vocab index of the final blank
  std::vector<TokenBoundary> boundaries;

  int num_columns() const { return static_cast<int>(tokens.size()) + 2; }
};

inline constexpr int kMaxUtteranceWords = 24;

// Lower-cases, drops characters outside the vocabulary, and collapses
// whitespace runs. Throws EmptyTextError when nothing survives.
std::string normalize_text(const std::string &raw, const Vocab &vocab);

// Greedy split into runs of at most max_words words.
std::vector<Utterance> split_utterances(const std::string &text,
                                        int max_words = kMaxUtteranceWords);

TokenSequence build_token_sequence(const std::vector<Utterance> &utts,
                                   const Vocab &vocab);

// Number of characters counted toward duration estimates (word separators
// excluded).
int text_length(const std::string &text);

// Assigns each utterance a duration proportional to its character count.
std::vector<Utterance> estimate_time_refs(std::vector<Utterance> utts,
                                          double total_speech_s);

// Reads a transcript: either plain text or one `start_s end_s text` caption
// per line. Every non-empty line is normalized and split on its own, so
// utterances never straddle lines. Lines that normalize to nothing are
// dropped. Utterance indices are assigned in order.
std::vector<Utterance> load_transcript(const std::filesystem::path &path,
                                       const Vocab &vocab,
                                       int max_words = kMaxUtteranceWords);
std::vector<Utterance> parse_transcript(const std::string &content,
                                        const Vocab &vocab,
                                        int max_words = kMaxUtteranceWords);

}  // namespace anchor_align

#endif  // ANCHOR_ALIGN_TEXTPREP_H_
