// trellis.cc

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

#include "anchor_align/trellis.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "anchor_align/errors.h"

namespace anchor_align {

namespace {

void check_tokens(const PosteriorSlice &window, const TokenSequence &ts) {
  const int v = window.vocab_size();
  if (ts.blank < 0 || ts.blank >= v) throw std::out_of_range("blank index outside vocabulary");
  for (int tok : ts.tokens)
    if (tok < 0 || tok >= v)
      throw std::out_of_range("token index " + std::to_string(tok) + " outside vocabulary");
}

// Symbol emitted by column j (1-based) of a sequence with `num_chars` text tokens.
int column_symbol(const std::vector<int> &tokens, int num_chars, int blank, int j) {
  return j <= num_chars ? tokens[j - 1] : blank;
}

double stay_cost(const PosteriorSlice &w, int frame, int symbol, int blank, bool is_char,
                 const TrellisOptions &opts) {
  const double lp_blank = w.at(frame, blank);
  if (opts.stay_on_char && is_char) return std::max(lp_blank, w.at(frame, symbol));
  return lp_blank;
}

// Builds the trace from a per-frame column assignment covering frames 0..psi.
PathTrace make_trace(const std::vector<int> &columns, const PosteriorSlice &w,
                     const std::vector<int> &tokens, int num_chars, int blank, double log_prob) {
  PathTrace trace;
  trace.log_prob = log_prob;
  trace.last_frame = static_cast<int>(columns.size()) - 1;
  int first = 0;
  while (columns[first] == 0) ++first;
  trace.first_frame = first;
  trace.rho.reserve(columns.size() - first);
  for (int f = first; f < static_cast<int>(columns.size()); ++f) {
    const int j = columns[f];
    const int sym = column_symbol(tokens, num_chars, blank, j);
    trace.rho.push_back(std::max(w.at(f, sym), w.at(f, blank)));
    if (trace.chars.empty() || trace.chars.back().token_pos != j - 1) {
      trace.chars.push_back({j - 1, sym, f, f});
    } else {
      trace.chars.back().end_frame = f;
    }
  }
  return trace;
}

int earliest_argmax(const std::vector<double> &values, int from) {
  int best = from;
  for (int t = from + 1; t < static_cast<int>(values.size()); ++t)
    if (values[t] > values[best]) best = t;
  return best;
}

}  // namespace

Trellis::Trellis(int rows, int cols)
    : rows_(rows), cols_(cols), k_(static_cast<std::size_t>(rows) * cols, kLogZero) {}

Trellis compute_trellis(const PosteriorSlice &window, const TokenSequence &ts,
                        const TrellisOptions &opts) {
  check_tokens(window, ts);
  const int frames = window.frames();
  const int cols = ts.num_columns();
  const int num_chars = static_cast<int>(ts.tokens.size());
  if (frames < 1) throw std::invalid_argument("window must hold at least one frame");
  Trellis tr(frames + 1, cols);
  for (int t = 0; t <= frames; ++t) tr.at(t, 0) = 0.0;
  for (int t = 1; t <= frames; ++t) {
    const int f = t - 1;
    for (int j = 1; j < cols; ++j) {
      const int sym = column_symbol(ts.tokens, num_chars, ts.blank, j);
      const double stay =
          tr.at(t - 1, j) + stay_cost(window, f, sym, ts.blank, j <= num_chars, opts);
      const double advance = tr.at(t - 1, j - 1) + window.at(f, sym);
      tr.at(t, j) = advance >= stay ? advance : stay;
    }
  }
  return tr;
}

std::vector<int> PathTrace::frame_columns() const {
  std::vector<int> cols(last_frame + 1, 0);
  for (const auto &c : chars)
    for (int f = c.start_frame; f <= c.end_frame; ++f) cols[f] = c.token_pos + 1;
  return cols;
}

PathTrace backtrack(const Trellis &tr, const PosteriorSlice &window, const TokenSequence &ts,
                    const TrellisOptions &opts) {
  const int frames = tr.rows() - 1;
  const int final_col = tr.cols() - 1;
  const int num_chars = static_cast<int>(ts.tokens.size());
  std::vector<double> last(tr.rows());
  for (int t = 0; t <= frames; ++t) last[t] = tr.at(t, final_col);
  const int psi = earliest_argmax(last, 1);
  if (last[psi] == kLogZero) throw NoPathError("window too short for the text");

  std::vector<int> columns(psi, 0);
  int j = final_col;
  for (int t = psi; t >= 1 && j > 0; --t) {
    const int f = t - 1;
    columns[f] = j;
    const int sym = column_symbol(ts.tokens, num_chars, ts.blank, j);
    const double stay =
        tr.at(t - 1, j) + stay_cost(window, f, sym, ts.blank, j <= num_chars, opts);
    const double advance = tr.at(t - 1, j - 1) + window.at(f, sym);
    if (advance >= stay) --j;
  }
  return make_trace(columns, window, ts.tokens, num_chars, ts.blank, last[psi]);
}

// ---------------------------------------------------------------------------

BatchLattice::BatchLattice(const PosteriorSlice &window, const TokenSequence &ts,
                           const TrellisOptions &opts)
    : window_(window), ts_(ts), opts_(opts), num_chars_(static_cast<int>(ts.tokens.size())) {
  check_tokens(window, ts);
  const int frames = window.frames();
  const int c = num_chars_;
  decisions_.assign(static_cast<std::size_t>(frames) * c, 0);
  end_columns_.assign(ts.boundaries.size(), std::vector<double>(frames + 1, kLogZero));

  std::vector<double> prev(c + 1, kLogZero), cur(c + 1, kLogZero);
  prev[0] = cur[0] = 0.0;
  auto record = [&](int t, const std::vector<double> &row) {
    for (std::size_t n = 0; n < ts_.boundaries.size(); ++n)
      end_columns_[n][t] = row[ts_.boundaries[n].last_token + 1];
  };
  record(0, prev);
  for (int t = 1; t <= frames; ++t) {
    const int f = t - 1;
    const double lp_blank = window.at(f, ts.blank);
    std::uint8_t *dec = decisions_.data() + static_cast<std::size_t>(f) * c;
    // Column j cannot be reached before row j.
    const int reach = std::min(c, t);
    for (int j = 1; j <= reach; ++j) {
      const int sym = ts.tokens[j - 1];
      const double lp_sym = window.at(f, sym);
      const double stay_lp = opts.stay_on_char ? std::max(lp_blank, lp_sym) : lp_blank;
      const double stay = prev[j] + stay_lp;
      const double advance = prev[j - 1] + lp_sym;
      if (advance >= stay) {
        cur[j] = advance;
        dec[j - 1] = 1;
      } else {
        cur[j] = stay;
      }
    }
    record(t, cur);
    std::swap(prev, cur);
    cur[0] = 0.0;
  }
}

TokenSequence BatchLattice::prefix_tokens(int n) const {
  if (n < 1 || n > num_utterances()) throw std::out_of_range("utterance prefix out of range");
  TokenSequence out;
  out.blank = ts_.blank;
  const int last = ts_.boundaries[n - 1].last_token;
  out.tokens.assign(ts_.tokens.begin(), ts_.tokens.begin() + last + 1);
  out.boundaries.assign(ts_.boundaries.begin(), ts_.boundaries.begin() + n);
  return out;
}

PathTrace BatchLattice::trace_prefix(int n) const {
  if (n < 1 || n > num_utterances()) throw std::out_of_range("utterance prefix out of range");
  const int frames = window_.frames();
  const int end_col = ts_.boundaries[n - 1].last_token + 1;
  const auto &kend = end_columns_[n - 1];

  // Final blank column of the prefix: both transitions consume blank.
  std::vector<double> fin(frames + 1, kLogZero);
  std::vector<std::uint8_t> fin_adv(frames + 1, 0);
  for (int t = 1; t <= frames; ++t) {
    const double lp_blank = window_.at(t - 1, ts_.blank);
    const double stay = fin[t - 1] + lp_blank;
    const double advance = kend[t - 1] + lp_blank;
    if (advance >= stay) {
      fin[t] = advance;
      fin_adv[t] = 1;
    } else {
      fin[t] = stay;
    }
  }
  const int psi = earliest_argmax(fin, 1);
  if (fin[psi] == kLogZero) throw NoPathError("window too short for the text");

  std::vector<int> columns(psi, 0);
  int j = end_col + 1;
  for (int t = psi; t >= 1 && j > 0; --t) {
    columns[t - 1] = j;
    const bool adv = j == end_col + 1 ? fin_adv[t] != 0 : advanced(t, j);
    if (adv) --j;
  }
  return make_trace(columns, window_, ts_.tokens, end_col, ts_.blank, fin[psi]);
}

// ---------------------------------------------------------------------------
// Scoring

std::vector<double> fragment_scores(std::span<const double> rho, int fragment_frames,
                                    FragmentMean mean) {
  if (fragment_frames < 1) throw std::invalid_argument("fragment length must be >= 1");
  std::vector<double> out;
  for (std::size_t begin = 0; begin < rho.size(); begin += fragment_frames) {
    const std::size_t end = std::min(rho.size(), begin + fragment_frames);
    if (mean == FragmentMean::kLog) {
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += rho[i];
      out.push_back(std::min(0.0, sum / static_cast<double>(end - begin)));
      continue;
    }
    const double mx = *std::max_element(rho.begin() + begin, rho.begin() + end);
    if (mx == kLogZero) {
      out.push_back(kLogZero);
      continue;
    }
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += std::exp(rho[i] - mx);
    out.push_back(std::min(0.0, mx + std::log(sum / static_cast<double>(end - begin))));
  }
  return out;
}

double segment_score(std::span<const double> fragments) {
  if (fragments.empty()) throw std::invalid_argument("no fragments to score");
  return *std::min_element(fragments.begin(), fragments.end());
}

double normalize_score(double s_seg, double segment_s, double reference_s) {
  if (!(segment_s > 0.0) || !(reference_s > 0.0))
    throw std::invalid_argument("segment and reference lengths must be positive");
  return s_seg * segment_s / reference_s;
}

PenalizedScore apply_short_penalty(double s_seg, int length_frames, int fragment_frames,
                                   double penalty) {
  if (length_frames <= fragment_frames) return {std::min(s_seg, penalty), true};
  return {s_seg, false};
}

std::vector<UtteranceAlignment> score_utterances(const PathTrace &trace, const TokenSequence &ts,
                                                 const ScoringParams &params, int frame_offset) {
  std::vector<UtteranceAlignment> out;
  out.reserve(ts.boundaries.size());
  for (const auto &b : ts.boundaries) {
    UtteranceAlignment ua;
    ua.utt_index = b.utt_index;
    // chars[k] is token k: every column on the path is visited.
    ua.start_frame = trace.chars[b.first_token].start_frame;
    ua.end_frame = trace.chars[b.last_token].start_frame;
    for (int k = b.first_token; k <= b.last_token; ++k) {
      auto c = trace.chars[k];
      c.start_frame += frame_offset;
      c.end_frame += frame_offset;
      ua.chars.push_back(c);
    }
    for (int f = ua.start_frame; f <= ua.end_frame; ++f) ua.rho.push_back(trace.rho_at(f));
    const auto frags = fragment_scores(ua.rho, params.fragment_frames, params.mean);
    const auto pen = apply_short_penalty(segment_score(frags), ua.length_frames(),
                                         params.fragment_frames, params.short_penalty);
    ua.s_seg = pen.score;
    ua.penalized = pen.penalized;
    ua.s_seg_norm = normalize_score(ua.s_seg, ua.length_frames() * params.frame_duration_s,
                                    params.reference_s);
    ua.start_frame += frame_offset;
    ua.end_frame += frame_offset;
    out.push_back(std::move(ua));
  }
  return out;
}

}  // namespace anchor_align
