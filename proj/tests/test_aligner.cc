// tests/test_aligner.cc

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

#include <cmath>
#include <set>

#include "doctest.h"

#include "anchor_align/aligner.h"
#include "anchor_align/errors.h"
#include "anchor_align/synthdata.h"
#include "test_support.h"

using namespace anchor_align;
using namespace anchor_align::testing;

namespace {

const Vocab &es() {
  static const Vocab v = spanish_vocab();
  return v;
}

// Utterances laid out back to back with 0.5 s gaps, dense characters.
SynthSpec layout(const std::vector<std::string> &spoken, double lead_s = 0.5) {
  SynthSpec spec;
  spec.noise_seed = 21;
  double t = lead_s;
  for (const auto &s : spoken) {
    const double len = placement_units(s) * spec.frame_duration_s;
    spec.utterances.push_back({s, t, t + len, ""});
    t += len + 0.5;
  }
  spec.total_s = t;
  return spec;
}

std::vector<Utterance> as_utterances(const std::vector<std::string> &texts, double total_s) {
  std::vector<Utterance> out;
  for (std::size_t i = 0; i < texts.size(); ++i)
    out.push_back({static_cast<int>(i), normalize_text(texts[i], es()), 1, 0.0});
  return estimate_time_refs(out, total_s);
}

std::vector<std::string> sentences(int n, std::uint64_t seed, int words = 10) {
  Rng rng(seed);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(random_sentence(rng, words));
  return out;
}

bool near_truth(const UtteranceAlignment &a, const GroundTruth &g, int tol_frames = 10) {
  return std::abs(a.start_frame - g.start_frame) <= tol_frames &&
         std::abs(a.end_frame - g.end_frame) <= tol_frames;
}

}  // namespace

TEST_CASE("params validation") {
  AlignParams p;
  CHECK_NOTHROW(p.validate());
  p.threshold = 0.0;
  CHECK_THROWS(p.validate());
  p = AlignParams{};
  p.window_s = 700.0;
  CHECK_THROWS(p.validate());
  p = AlignParams{};
  p.window_step_s = 0.0;
  CHECK_THROWS(p.validate());
  p = AlignParams{};
  p.max_utts_per_window = 0;
  CHECK_THROWS(p.validate());
}

TEST_CASE("threshold boundary") {
  CHECK(meets_threshold(-2.0, -2.0));
  CHECK_FALSE(meets_threshold(std::nextafter(-2.0, -3.0), -2.0));
  CHECK_FALSE(meets_threshold(std::log(0.13), -2.0));  // ln 0.13 = -2.04
  CHECK(meets_threshold(std::log(0.136), -2.0));
}

TEST_CASE("window with three clean utterances") {
  const auto texts = sentences(3, 1);
  const auto syn = synth_posteriors(layout(texts), es());
  const auto utts = as_utterances(texts, syn.posteriors.duration_s());
  const auto res =
      align_window(syn.posteriors, {0, syn.posteriors.frames()}, utts, es(), AlignParams{});
  REQUIRE(res.best);
  REQUIRE(res.best->size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((*res.best)[i].s_seg > -0.2);
    CHECK(near_truth((*res.best)[i], syn.truth[i], 0));
  }
  CHECK(res.last_score >= -2.0);
  CHECK(res.best->back().anchor);
  CHECK_FALSE(res.best->front().anchor);
}

TEST_CASE("corrupted tail is shrunk away") {
  const auto texts = sentences(3, 2);
  const auto syn = synth_posteriors(layout(texts), es());
  auto transcript = texts;
  Rng rng(8);
  transcript[2] = unrelated_text(rng, static_cast<int>(utf8_length(texts[2])));
  const auto utts = as_utterances(transcript, syn.posteriors.duration_s());

  const auto clean = align_window(syn.posteriors, {0, syn.posteriors.frames()},
                                  as_utterances(texts, syn.posteriors.duration_s()), es(),
                                  AlignParams{});
  const auto res =
      align_window(syn.posteriors, {0, syn.posteriors.frames()}, utts, es(), AlignParams{});
  REQUIRE(res.best);
  CHECK(res.best->size() <= 2);
  CHECK(res.last_score >= -2.0);
  CHECK(res.last_score >= clean.last_score - 1e-12);
}

TEST_CASE("seven above, three below, last above: all ten kept") {
  const auto texts = sentences(10, 3);
  const auto syn = synth_posteriors(layout(texts), es());
  auto transcript = texts;
  Rng rng(5);
  for (int i : {2, 5, 7})
    transcript[i] = unrelated_text(rng, static_cast<int>(utf8_length(texts[i])));
  const auto utts = as_utterances(transcript, syn.posteriors.duration_s());
  const auto res =
      align_window(syn.posteriors, {0, syn.posteriors.frames()}, utts, es(), AlignParams{});
  REQUIRE(res.best);
  REQUIRE(res.best->size() == 10);
  int above = 0, below = 0;
  for (const auto &a : *res.best) (a.s_seg >= -2.0 ? above : below)++;
  CHECK(above == 7);
  CHECK(below == 3);
  for (int i : {2, 5, 7}) CHECK_FALSE((*res.best)[i].accepted);
  CHECK(res.best->back().accepted);
  CHECK(res.best->back().anchor);
}

TEST_CASE("short utterances never anchor") {
  // "sí" spans two frames; alone it cannot be accepted.
  const std::vector<std::string> texts = {"sí"};
  const auto syn = synth_posteriors(layout(texts), es());
  const auto res = align_window(syn.posteriors, {0, syn.posteriors.frames()},
                                as_utterances(texts, syn.posteriors.duration_s()), es(),
                                AlignParams{});
  CHECK_FALSE(res.best);
  CHECK(res.last_score == -4.0);

  // Mid-batch it is kept, penalized, with a long utterance as anchor.
  const std::vector<std::string> pair = {"sí", "el gobierno asegura que la economía sigue"};
  const auto syn2 = synth_posteriors(layout(pair), es());
  const auto res2 = align_window(syn2.posteriors, {0, syn2.posteriors.frames()},
                                 as_utterances(pair, syn2.posteriors.duration_s()), es(),
                                 AlignParams{});
  REQUIRE(res2.best);
  REQUIRE(res2.best->size() == 2);
  CHECK((*res2.best)[0].penalized);
  CHECK((*res2.best)[0].s_seg == -4.0);
  CHECK_FALSE((*res2.best)[0].anchor);
  CHECK(res2.best->back().anchor);
}

TEST_CASE("window too small for the text") {
  const auto texts = sentences(2, 4);
  const auto syn = synth_posteriors(layout(texts), es());
  const auto utts = as_utterances(texts, syn.posteriors.duration_s());
  const auto res = align_window(syn.posteriors, {0, 5}, utts, es(), AlignParams{});
  CHECK_FALSE(res.best);
  CHECK_THROWS(align_window(syn.posteriors, {0, 5}, {}, es(), AlignParams{}));
}

TEST_CASE("align_file on a clean synthetic file") {
  CorpusOptions opts;
  opts.num_utterances = 30;
  opts.duration_s = 180.0;
  opts.seed = 6;
  const SynthSpec spec = random_corpus(opts);
  const auto syn = synth_posteriors(spec, es());
  std::vector<std::string> texts;
  for (const auto &u : spec.utterances) texts.push_back(u.text);
  const auto run =
      align_file(syn.posteriors, as_utterances(texts, syn.posteriors.duration_s()), es(), {}, 0, "f");
  CHECK(run.skipped.empty());
  REQUIRE(run.utterances.size() == 30);
  for (const auto &a : run.utterances) CHECK(near_truth(a, syn.truth[a.utt_index]));

  // Anchors strictly increase and clear the threshold; spans do not overlap.
  for (std::size_t i = 0; i < run.anchors.size(); ++i) {
    CHECK(run.anchors[i].s_seg >= -2.0);
    if (i) CHECK(run.anchors[i].end_frame > run.anchors[i - 1].end_frame);
  }
  for (std::size_t i = 1; i < run.utterances.size(); ++i)
    CHECK(run.utterances[i].start_frame > run.utterances[i - 1].end_frame);

  // Deterministic.
  const auto again =
      align_file(syn.posteriors, as_utterances(texts, syn.posteriors.duration_s()), es(), {}, 0, "f");
  REQUIRE(again.utterances.size() == run.utterances.size());
  for (std::size_t i = 0; i < run.utterances.size(); ++i) {
    CHECK(again.utterances[i].start_frame == run.utterances[i].start_frame);
    CHECK(again.utterances[i].s_seg == run.utterances[i].s_seg);
  }
}

TEST_CASE("align_file recovers after a run of text absent from the audio") {
  CorpusOptions opts;
  opts.num_utterances = 60;
  opts.duration_s = 360.0;
  opts.seed = 7;
  const SynthSpec spec = random_corpus(opts);
  const auto syn = synth_posteriors(spec, es());
  std::vector<std::string> texts;
  Rng rng(99);
  for (const auto &u : spec.utterances) texts.push_back(u.text);
  for (int i = 40; i <= 44; ++i)
    texts[i] = unrelated_text(rng, static_cast<int>(utf8_length(texts[i])));
  const auto run =
      align_file(syn.posteriors, as_utterances(texts, syn.posteriors.duration_s()), es(), {});

  std::set<int> seen;
  for (const auto &a : run.utterances) {
    seen.insert(a.utt_index);
    if (a.utt_index >= 40 && a.utt_index <= 44) CHECK(a.s_seg < -2.0);
    if (a.utt_index > 44) CHECK(near_truth(a, syn.truth[a.utt_index]));
  }
  for (int s : run.skipped) CHECK(seen.insert(s).second);
  CHECK(seen.size() == 60);  // each index exactly once
  int after = 0;
  for (const auto &a : run.utterances) after += a.utt_index > 44;
  CHECK(after == 15);

  // Every logged iteration makes progress.
  for (const auto &it : run.iterations_log) {
    if (it.outcome == WindowOutcome::kAccepted) CHECK(it.n_accepted >= 1);
    if (it.outcome == WindowOutcome::kSkip) CHECK(it.skipped_utt >= 0);
  }
}

TEST_CASE("align_file skips what the audio cannot hold") {
  const auto texts = sentences(3, 11);
  const auto syn = synth_posteriors(layout({texts[0]}), es());
  // Audio holds the first utterance only.
  const auto run = align_file(syn.posteriors, as_utterances(texts, syn.posteriors.duration_s()),
                              es(), {});
  CHECK(run.utterances.size() + run.skipped.size() == 3);
  CHECK(run.skipped.size() >= 2);
}

TEST_CASE("frames_to_seconds") {
  AlignmentRun run;
  UtteranceAlignment a;
  a.utt_index = 0;
  a.start_frame = 50;
  a.end_frame = 99;
  run.utterances.push_back(a);
  auto t = frames_to_seconds(run, FrameMap::identity(200), 0.02);
  CHECK(t[0].start_s == doctest::Approx(1.0));
  CHECK(t[0].end_s == doctest::Approx(2.0));

  // A 40 s gap removed before the utterance shifts it by 40 s.
  const FrameMap fm({{0, 0, 10}, {10, 2010, 500}});
  t = frames_to_seconds(run, fm, 0.02);
  CHECK(t[0].start_s == doctest::Approx(1.0 + 40.0));
  CHECK(t[0].end_s == doctest::Approx(2.0 + 40.0));

  run.utterances[0].end_frame = 600;
  CHECK_THROWS_AS(frames_to_seconds(run, fm, 0.02), std::out_of_range);
}
