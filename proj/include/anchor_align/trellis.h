// anchor_align/trellis.h

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

#ifndef ANCHOR_ALIGN_TRELLIS_H_
#define ANCHOR_ALIGN_TRELLIS_H_

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "anchor_align/posterior_io.h"
#include "anchor_align/textprep.h"

namespace anchor_align {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

struct TrellisOptions {
  // Standard-CTC variant: a stay on a character column may also consume the
  // character's own probability. Off by default; the recursion then charges
  // every stay with the blank probability.
  bool stay_on_char = false;
};

// Lattice of maximum joint log-probabilities k[t][j].
//
// Rows t = 0..T_w (row t consumes window frame t-1). Columns j = 0..M-1:
// column 0 is the virtual start (k[t][0] = 0 for every t, so the text may
// begin at any frame), columns 1..M-2 are the text tokens and column M-1 the
// final blank.
class Trellis {
 public:
  Trellis(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double at(int t, int j) const { return k_[static_cast<std::size_t>(t) * cols_ + j]; }
  double &at(int t, int j) { return k_[static_cast<std::size_t>(t) * cols_ + j]; }

 private:
  int rows_;
  int cols_;
  std::vector<double> k_;
};

Trellis compute_trellis(const PosteriorSlice &window, const TokenSequence &ts,
                        const TrellisOptions &opts = {});

struct CharAlignment {
  int token_pos;  // index into TokenSequence::tokens; tokens.size() = final blank
  int symbol;     // vocab index
  int start_frame;
  int end_frame;  // inclusive
};

// Result of backtracking. Frames are window-relative.
struct PathTrace {
  std::vector<CharAlignment> chars;  // text tokens in order, then the final blank
  int first_frame = 0;               // first frame past the virtual start
  int last_frame = 0;                // psi
  std::vector<double> rho;           // log rho for first_frame..last_frame
  double log_prob = kLogZero;

  // Column per frame for frames 0..last_frame (0 = still at the virtual start).
  std::vector<int> frame_columns() const;
  double rho_at(int frame) const { return rho[frame - first_frame]; }
};

// Starts from the earliest frame maximizing the final-blank column and walks
// back, preferring the advance transition on exact ties. Throws NoPathError
// when the final column is -inf everywhere.
PathTrace backtrack(const Trellis &tr, const PosteriorSlice &window, const TokenSequence &ts,
                    const TrellisOptions &opts = {});

// Single forward pass over the characters of a list of utterances that yields
// the alignment of every utterance prefix. The result for prefix n is
// identical to compute_trellis + backtrack on the first n utterances; only the
// final-blank column is recomputed per prefix.
class BatchLattice {
 public:
  BatchLattice(const PosteriorSlice &window, const TokenSequence &ts,
               const TrellisOptions &opts = {});

  int num_utterances() const { return static_cast<int>(ts_.boundaries.size()); }
  // Throws NoPathError when the window cannot hold the first n utterances.
  PathTrace trace_prefix(int n) const;
  TokenSequence prefix_tokens(int n) const;

 private:
  bool advanced(int t, int j) const {
    return decisions_[static_cast<std::size_t>(t - 1) * num_chars_ + (j - 1)] != 0;
  }

  PosteriorSlice window_;
  TokenSequence ts_;
  TrellisOptions opts_;
  int num_chars_;
  std::vector<std::uint8_t> decisions_;         // advance flags, rows 1..T_w x cols 1..C
  std::vector<std::vector<double>> end_columns_;  // k[.][last token of utterance n]
};

// How rho is averaged inside a fragment.
enum class FragmentMean {
  kLog,     // arithmetic mean of log rho
  kLinear,  // log of the arithmetic mean of linear rho
};

// Mean of rho over consecutive blocks of `fragment_frames`, in log. The
// trailing block may be shorter and is averaged over its own length.
std::vector<double> fragment_scores(std::span<const double> rho, int fragment_frames = 30,
                                    FragmentMean mean = FragmentMean::kLog);
double segment_score(std::span<const double> fragments);
// Length normalization: s_seg * S / U.
double normalize_score(double s_seg, double segment_s, double reference_s = 8.0);

struct PenalizedScore {
  double score;
  bool penalized;
};
// Utterances of at most `fragment_frames` frames are pushed down to `penalty`.
PenalizedScore apply_short_penalty(double s_seg, int length_frames, int fragment_frames = 30,
                                   double penalty = -4.0);

struct UtteranceAlignment {
  int utt_index = 0;
  int start_frame = 0;  // first character emission
  int end_frame = 0;    // last character emission, inclusive
  std::vector<CharAlignment> chars;
  std::vector<double> rho;  // frames start_frame..end_frame
  double s_seg = 0.0;
  double s_seg_norm = 0.0;
  bool penalized = false;
  bool accepted = false;  // own score meets the acceptance threshold
  bool anchor = false;    // last utterance of an accepted batch

  int length_frames() const { return end_frame - start_frame + 1; }
};

struct ScoringParams {
  int fragment_frames = 30;
  double reference_s = 8.0;
  double short_penalty = -4.0;
  double frame_duration_s = 0.02;
  FragmentMean mean = FragmentMean::kLog;
};

// Splits a path into per-utterance alignments and scores each one. Frames are
// shifted by frame_offset.
std::vector<UtteranceAlignment> score_utterances(const PathTrace &trace, const TokenSequence &ts,
                                                 const ScoringParams &params,
                                                 int frame_offset = 0);

}  // namespace anchor_align

#endif  // ANCHOR_ALIGN_TRELLIS_H_
