// aligner.cc

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

#include "anchor_align/aligner.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "anchor_align/errors.h"

namespace anchor_align {

void AlignParams::validate() const {
  if (!(threshold < 0.0)) throw std::invalid_argument("threshold must be negative");
  if (!(window_s > 0.0 && window_s <= max_window_s))
    throw std::invalid_argument("need 0 < window_s <= max_window_s");
  if (!(window_step_s > 0.0)) throw std::invalid_argument("window_step_s must be positive");
  if (max_utts_per_window < 1) throw std::invalid_argument("max_utts_per_window must be >= 1");
  if (fragment_frames < 1) throw std::invalid_argument("fragment length must be >= 1");
  if (!(reference_s > 0.0)) throw std::invalid_argument("reference length must be positive");
}

const char *outcome_name(WindowOutcome outcome) {
  switch (outcome) {
    case WindowOutcome::kAccepted: return "accepted";
    case WindowOutcome::kGrow: return "grow";
    case WindowOutcome::kSkip: return "skip";
  }
  return "?";
}

WindowResult align_window(const PosteriorMatrix &pm, Window window,
                          const std::vector<Utterance> &utts, const Vocab &vocab,
                          const AlignParams &params) {
  if (utts.empty()) throw std::invalid_argument("align_window needs at least one utterance");
  const PosteriorSlice slice = pm.slice(window.start_frame, window.len_frames);
  const TokenSequence ts = build_token_sequence(utts, vocab);
  const BatchLattice lattice(slice, ts, params.trellis);
  const ScoringParams scoring{params.fragment_frames, params.reference_s, params.short_penalty,
                              pm.frame_duration_s(), params.fragment_mean};

  WindowResult result;
  for (int n = static_cast<int>(utts.size()); n >= 1; --n) {
    std::vector<UtteranceAlignment> alns;
    double last = kLogZero;
    try {
      alns = score_utterances(lattice.trace_prefix(n), lattice.prefix_tokens(n), scoring,
                              window.start_frame);
      last = alns.back().s_seg;
    } catch (const NoPathError &) {
      // Too much text for the window; fewer utterances may still fit.
    }
    const bool good = !alns.empty() && meets_threshold(last, params.threshold);
    if (result.best) {
      // Keep shrinking only while the last utterance keeps improving.
      if (!good || !(last > result.last_score)) break;
    } else if (!good) {
      result.last_score = last;
      continue;
    }
    for (auto &a : alns) a.accepted = meets_threshold(a.s_seg, params.threshold);
    alns.back().anchor = true;
    result.best = std::move(alns);
    result.last_score = last;
  }
  return result;
}

AlignmentRun align_file(const PosteriorMatrix &pm, const std::vector<Utterance> &utts,
                        const Vocab &vocab, const AlignParams &params, int first_frame,
                        std::string file_id) {
  params.validate();
  AlignmentRun run;
  run.file_id = std::move(file_id);
  const double fd = pm.frame_duration_s();
  const int total = pm.frames();
  const int n_utts = static_cast<int>(utts.size());
  auto to_frames = [fd](double s) { return static_cast<int>(std::lround(s / fd)); };

  int cursor = 0;
  int start = std::max(0, first_frame);
  double window_s = params.window_s;
  while (cursor < n_utts) {
    if (start >= total) break;  // audio exhausted

    int n = 0;
    double planned = 0.0;
    while (cursor + n < n_utts && n < params.max_utts_per_window) {
      const double d = utts[cursor + n].est_duration_s;
      if (n > 0 && planned + d > window_s) break;
      planned += d;
      ++n;
    }
    const Window window{start, std::min(to_frames(window_s), total - start)};
    const std::vector<Utterance> batch(utts.begin() + cursor, utts.begin() + cursor + n);
    WindowResult res = align_window(pm, window, batch, vocab, params);

    IterationRecord rec{window.start_frame, window.len_frames, n, WindowOutcome::kAccepted};
    if (res.best) {
      auto &best = *res.best;
      const auto &last = best.back();
      run.anchors.push_back({last.utt_index, last.end_frame, last.s_seg});
      start = last.end_frame + 1;
      rec.n_accepted = static_cast<int>(best.size());
      cursor += rec.n_accepted;
      for (auto &a : best) run.utterances.push_back(std::move(a));
      window_s = params.window_s;
    } else if (window_s + params.window_step_s <= params.max_window_s) {
      rec.outcome = WindowOutcome::kGrow;
      window_s += params.window_step_s;
    } else {
      // Give up on the first utterance and move the reference forward by its
      // proportional estimate.
      rec.outcome = WindowOutcome::kSkip;
      rec.skipped_utt = utts[cursor].utt_index;
      run.skipped.push_back(utts[cursor].utt_index);
      start += std::max(1, to_frames(utts[cursor].est_duration_s));
      ++cursor;
      window_s = params.window_s;
    }
    run.iterations_log.push_back(rec);
  }
  for (; cursor < n_utts; ++cursor) run.skipped.push_back(utts[cursor].utt_index);
  return run;
}

std::vector<TimedUtterance> frames_to_seconds(const AlignmentRun &run, const FrameMap &fm,
                                              double frame_duration_s) {
  std::vector<TimedUtterance> out;
  out.reserve(run.utterances.size());
  for (const auto &u : run.utterances) {
    const int start = map_frames_back(fm, u.start_frame);
    const int end = map_frames_back(fm, u.end_frame);
    out.push_back({u.utt_index, start * frame_duration_s, (end + 1) * frame_duration_s, u.s_seg,
                   u.s_seg_norm, u.penalized, u.accepted, u.anchor});
  }
  return out;
}

}  // namespace anchor_align
