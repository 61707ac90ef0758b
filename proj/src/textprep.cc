// textprep.cc

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

#include "anchor_align/textprep.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "anchor_align/errors.h"
#include "anchor_align/utf8.h"

namespace anchor_align {

namespace {

std::vector<std::string> split_words(const std::string &text) {
  std::vector<std::string> words;
  std::istringstream ss(text);
  std::string w;
  while (ss >> w) words.push_back(w);
  return words;
}

bool is_number(const std::string &s) {
  if (s.empty()) return false;
  char *end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace

std::string normalize_text(const std::string &raw, const Vocab &vocab) {
  const std::u32string sep = utf8::decode(vocab.symbol(vocab.separator_index()));
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : utf8::decode(raw)) {
    const bool as_space = utf8::is_space(c) || (sep.size() == 1 && c == sep[0]);
    if (as_space) {
      pending_space = !out.empty();
      continue;
    }
    c = utf8::to_lower(c);
    const auto idx = vocab.index_of(c);
    if (!idx || *idx == vocab.separator_index()) continue;
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  if (out.empty()) throw EmptyTextError("text is empty after normalization");
  return utf8::encode(out);
}

std::vector<Utterance> split_utterances(const std::string &text, int max_words) {
  if (max_words < 1) throw std::invalid_argument("max_words must be >= 1");
  const auto words = split_words(text);
  std::vector<Utterance> utts;
  for (std::size_t i = 0; i < words.size(); i += max_words) {
    Utterance u;
    u.utt_index = static_cast<int>(utts.size());
    const std::size_t end = std::min(words.size(), i + max_words);
    for (std::size_t k = i; k < end; ++k) {
      if (k > i) u.text += ' ';
      u.text += words[k];
    }
    u.word_count = static_cast<int>(end - i);
    utts.push_back(std::move(u));
  }
  return utts;
}

TokenSequence build_token_sequence(const std::vector<Utterance> &utts, const Vocab &vocab) {
  TokenSequence ts;
  ts.blank = vocab.blank_index();
  for (std::size_t u = 0; u < utts.size(); ++u) {
    if (u > 0) ts.tokens.push_back(vocab.separator_index());
    const int first = static_cast<int>(ts.tokens.size());
    for (char32_t c : utf8::decode(utts[u].text)) {
      if (c == U' ') {
        ts.tokens.push_back(vocab.separator_index());
        continue;
      }
      const auto idx = vocab.index_of(c);
      if (!idx)
        throw FormatError("utterance " + std::to_string(utts[u].utt_index) +
                          " has a symbol outside the vocabulary");
      ts.tokens.push_back(*idx);
    }
    const int last = static_cast<int>(ts.tokens.size()) - 1;
    if (last < first)
      throw FormatError("utterance " + std::to_string(utts[u].utt_index) + " is empty");
    ts.boundaries.push_back({utts[u].utt_index, first, last});
  }
  return ts;
}

int text_length(const std::string &text) {
  int n = 0;
  for (char32_t c : utf8::decode(text))
    if (c != U' ') ++n;
  return n;
}

std::vector<Utterance> estimate_time_refs(std::vector<Utterance> utts, double total_speech_s) {
  if (!(total_speech_s > 0.0)) throw std::invalid_argument("total speech time must be > 0");
  if (utts.empty()) throw std::invalid_argument("no utterances");
  long long total = 0;
  for (const auto &u : utts) total += text_length(u.text);
  if (total == 0) throw std::invalid_argument("total character count is zero");
  for (auto &u : utts)
    u.est_duration_s = total_speech_s * static_cast<double>(text_length(u.text)) /
                       static_cast<double>(total);
  return utts;
}

std::vector<Utterance> parse_transcript(const std::string &content, const Vocab &vocab,
                                        int max_words) {
  std::vector<Utterance> out;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    // Caption lines carry two leading timestamps that are not spoken text.
    auto words = split_words(line);
    if (words.size() >= 3 && is_number(words[0]) && is_number(words[1])) {
      const auto pos = line.find(words[1], line.find(words[0]) + words[0].size());
      line = line.substr(pos + words[1].size());
    }
    std::string norm;
    try {
      norm = normalize_text(line, vocab);
    } catch (const EmptyTextError &) {
      continue;
    }
    for (auto &u : split_utterances(norm, max_words)) {
      u.utt_index = static_cast<int>(out.size());
      out.push_back(std::move(u));
    }
  }
  return out;
}

std::vector<Utterance> load_transcript(const std::filesystem::path &path, const Vocab &vocab,
                                       int max_words) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_transcript(ss.str(), vocab, max_words);
}

}  // namespace anchor_align
