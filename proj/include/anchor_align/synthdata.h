// anchor_align/synthdata.h

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

#ifndef ANCHOR_ALIGN_SYNTHDATA_H_
#define ANCHOR_ALIGN_SYNTHDATA_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "anchor_align/posterior_io.h"
#include "anchor_align/textprep.h"
#include "anchor_align/trellis.h"

namespace anchor_align {

struct SynthUtterance {
  std::string text;  // what is "spoken"; drives the posteriors
  double start_s = 0.0;
  double end_s = 0.0;
  std::string transcript;  // what the reference text says; empty = text
};

struct SynthSpec {
  std::vector<SynthUtterance> utterances;
  double frame_duration_s = 0.02;
  double peak_prob = 0.9;
  std::uint64_t noise_seed = 0;
  // Characters per second, used to derive spans given without an end time.
  double char_rate = 50.0;
  // Audio length; 0 means one second past the last utterance.
  double total_s = 0.0;
};

struct GroundTruth {
  int utt_index;
  int start_frame;  // first character emission
  int end_frame;    // last character emission, inclusive
};

struct SynthResult {
  PosteriorMatrix posteriors;
  std::vector<GroundTruth> truth;
};

// Each frame puts peak_prob on its scheduled symbol (a character or blank)
// and spreads the rest over the other symbols with seeded random weights.
// Characters sit on evenly spaced frames across their utterance span, with a
// blank frame forced between identical neighbours; each inter-utterance gap
// carries one separator emission at its midpoint.
SynthResult synth_posteriors(const SynthSpec &spec, const Vocab &vocab);

SynthSpec parse_manifest(const std::string &content);
SynthSpec load_manifest(const std::filesystem::path &path);

struct OracleResult {
  double log_prob;
  std::vector<int> path;  // trellis column per frame 0..psi
};

inline constexpr int kOracleMaxFrames = 14;
inline constexpr int kOracleMaxColumns = 10;

// Exhaustive search over every monotone stay/advance path. Ties resolve like
// the trellis: earliest end frame, then advance preferred walking backwards.
OracleResult oracle_best_path(const PosteriorSlice &window, const TokenSequence &ts,
                              const TrellisOptions &opts = {});

// Built-in Spanish inventory: blank, four special tokens, the word
// separator, a-z, ñ, the accented vowels and ü (38 symbols).
Vocab spanish_vocab();
std::string spanish_vocab_text();

using Rng = std::mt19937_64;
double uniform01(Rng &rng);

std::string random_sentence(Rng &rng, int num_words);
// Unrelated words trimmed or padded to exactly num_chars characters.
std::string unrelated_text(Rng &rng, int num_chars);

struct CorpusOptions {
  int num_utterances = 100;
  double duration_s = 600.0;
  int min_words = 6;
  int max_words = 24;
  double frame_duration_s = 0.02;
  double char_rate = 50.0;
  double peak_prob = 0.9;
  double lead_s = 1.0;
  double min_gap_s = 0.3;
  std::uint64_t seed = 1;
};

SynthSpec random_corpus(const CorpusOptions &opts);

// Frames needed to place a text's characters, including forced blanks.
int placement_units(const std::string &text);

}  // namespace anchor_align

#endif  // ANCHOR_ALIGN_SYNTHDATA_H_
