// tests/test_posterior_io.cc

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
#include <cstring>
#include <limits>
#include <map>

#include "doctest.h"

#include "anchor_align/errors.h"
#include "anchor_align/posterior_io.h"
#include "anchor_align/synthdata.h"
#include "test_support.h"

using namespace anchor_align;
using namespace anchor_align::testing;

TEST_CASE("smallest vocab") {
  const Vocab v = parse_vocab("#blank 0\n#separator 2\n0\t\xE2\x88\x85\n1\ta\n2\t \n");
  CHECK(v.size() == 3);
  CHECK(v.blank_index() == 0);
  CHECK(v.separator_index() == 2);
  CHECK(v.index_of(U'a') == 1);
  CHECK_FALSE(v.index_of(U'b').has_value());
}

TEST_CASE("spanish vocab file") {
  const Vocab v = load_vocab(std::filesystem::path(ANCHOR_ALIGN_DATA_DIR) / "vocab_es38.txt");
  CHECK(v.size() == 38);
  for (char32_t c : std::u32string(U"abcdefghijklmnopqrstuvwxyzñáéíóúü")) CHECK(v.index_of(c));
  CHECK(v.checksum() == spanish_vocab().checksum());
  CHECK(v.symbol(v.blank_index()) == "<pad>");
  CHECK(v.symbol(v.separator_index()) == "|");
}

TEST_CASE("vocab errors") {
  CHECK_THROWS_AS(parse_vocab("#blank 0\n#separator 1\n0\tx\n1\ta\n5\tb\n5\tc\n"), FormatError);
  CHECK_THROWS_AS(parse_vocab("#separator 1\n0\tx\n1\ta\n"), FormatError);
  CHECK_THROWS_AS(parse_vocab("#blank 0\n#separator 1\n0\tx\n1\tx\n"), FormatError);
  CHECK_THROWS_AS(parse_vocab("#blank 0\n#separator 1\n0\tx\n2\ta\n"), FormatError);
  CHECK_THROWS_AS(parse_vocab("#blank 0\n#separator 1\n0 x\n1\ta\n"), FormatError);
}

TEST_CASE("text posteriors") {
  const auto dir = temp_dir("post_text");
  const Vocab v2 = parse_vocab("#blank 0\n#separator 1\n0\t_\n1\ta\n");
  const auto path = dir / "two.post";
  write_text(path, "2 2 0.02\n" + std::to_string(std::log(0.1)) + " " +
                       std::to_string(std::log(0.9)) + "\n" + std::to_string(std::log(0.8)) +
                       " " + std::to_string(std::log(0.2)) + "\n");
  const auto pm = load_posteriors(path, v2);
  CHECK(pm.frames() == 2);
  CHECK(pm.vocab_size() == 2);
  CHECK(pm.at(1, 0) == doctest::Approx(std::log(0.8)));

  // Row with linear mass 0.5.
  write_text(path, "1 2 0.02\n" + std::to_string(std::log(0.25)) + " " +
                       std::to_string(std::log(0.25)) + "\n");
  CHECK_THROWS_AS(load_posteriors(path, v2), FormatError);
  write_text(path, "1 2 0.02\nnan 0\n");
  CHECK_THROWS_AS(load_posteriors(path, v2), FormatError);

  // Column count must match the vocabulary.
  const Vocab v3 = parse_vocab("#blank 0\n#separator 1\n0\t_\n1\ta\n2\tb\n");
  write_text(path, "1 2 0.02\n0 -inf\n");
  CHECK_THROWS_AS(load_posteriors(path, v3), FormatError);

  // Text writer round trip is exact.
  const auto syn = from_linear({{0.3, 0.7}, {0.6, 0.4}, {0.5, 0.5}});
  write_posteriors_text(dir / "rt.post", syn);
  const auto back = load_posteriors(dir / "rt.post", v2);
  CHECK(back.data() == syn.data());
}

TEST_CASE("binary posteriors round trip bit-exactly") {
  const auto dir = temp_dir("post_bin");
  const Vocab vocab = spanish_vocab();
  Rng rng(42);
  const int frames = 5000, v = vocab.size();
  std::vector<double> data;
  for (int t = 0; t < frames; ++t) {
    std::vector<double> w(v);
    double sum = 0.0;
    for (auto &x : w) sum += (x = 1e-4 + uniform01(rng));
    // Values representable in float32 survive the binary format exactly.
    for (double x : w) data.push_back(static_cast<float>(std::log(x / sum)));
  }
  data[7] = -std::numeric_limits<double>::infinity();
  const PosteriorMatrix pm(data, frames, v, 0.02);
  write_posteriors_binary(dir / "a.ctcp", pm);
  const auto back = load_posteriors(dir / "a.ctcp", vocab);
  CHECK(back.frames() == 5000);
  CHECK(back.duration_s() == doctest::Approx(100.0));
  CHECK(back.frame_duration_s() == static_cast<float>(0.02));
  REQUIRE(back.data().size() == pm.data().size());
  CHECK(std::memcmp(back.data().data(), pm.data().data(), pm.data().size() * sizeof(double)) == 0);

  write_posteriors_binary(dir / "b.ctcp", back);
  CHECK(read_text(dir / "a.ctcp") == read_text(dir / "b.ctcp"));
  const std::string bytes = read_text(dir / "a.ctcp");
  CHECK(bytes.substr(0, 4) == "CTCP");
  CHECK(bytes.size() == 4 + 4 + 4 + 4 + 4 + static_cast<std::size_t>(frames) * v * 4);

  write_text(dir / "trunc.ctcp", bytes.substr(0, 100));
  CHECK_THROWS_AS(load_posteriors(dir / "trunc.ctcp", vocab), FormatError);
}

namespace {

PosteriorMatrix uniform_matrix(int frames, int v = 2) {
  return PosteriorMatrix(std::vector<double>(static_cast<std::size_t>(frames) * v, std::log(1.0 / v)),
                         frames, v, 0.02);
}

// Frame t holds its own index in column 0 so that removal can be observed.
PosteriorMatrix tagged_matrix(int frames) {
  std::vector<double> data;
  for (int t = 0; t < frames; ++t) {
    const double p = 0.25 + 0.5 * (t % 1000) / 1000.0;
    data.push_back(std::log(p));
    data.push_back(std::log(1.0 - p));
  }
  return PosteriorMatrix(std::move(data), frames, 2, 0.02);
}

}  // namespace

TEST_CASE("speech regions covering everything keep the file") {
  const auto pm = uniform_matrix(500);
  const auto cp = apply_speech_regions(pm, SpeechRegions({{0.0, 10.0}}));
  CHECK(cp.posteriors.frames() == 500);
  CHECK(cp.frame_map.is_identity());
  CHECK(cp.posteriors.data() == pm.data());
}

TEST_CASE("a 40 s gap is removed, a 20 s gap is kept") {
  const auto pm = tagged_matrix(5000);  // 100 s
  const auto cut = apply_speech_regions(pm, SpeechRegions({{0.0, 30.0}, {70.0, 100.0}}));
  CHECK(cut.posteriors.frames() == 3000);
  for (int c = 0; c < cut.posteriors.frames(); ++c) {
    const int orig = c < 1500 ? c : c + 2000;  // direct index arithmetic
    REQUIRE(map_frames_back(cut.frame_map, c) == orig);
    REQUIRE(cut.posteriors.at(c, 0) == pm.at(orig, 0));
  }
  const auto kept = apply_speech_regions(pm, SpeechRegions({{0.0, 40.0}, {60.0, 100.0}}));
  CHECK(kept.posteriors.frames() == 5000);
  CHECK(kept.frame_map.is_identity());

  // Exactly max_gap_s is not longer than it.
  const auto edge = apply_speech_regions(pm, SpeechRegions({{0.0, 35.0}, {65.0, 100.0}}));
  CHECK(edge.posteriors.frames() == 5000);
  // Leading and trailing non-speech count as gaps.
  const auto ends = apply_speech_regions(pm, SpeechRegions({{31.0, 60.0}}));
  CHECK(ends.posteriors.frames() == 60 * 50 - 31 * 50);
  CHECK(map_frames_back(ends.frame_map, 0) == 31 * 50);
}

TEST_CASE("no speech at all") {
  const auto pm = uniform_matrix(5000);
  CHECK_THROWS_AS(apply_speech_regions(pm, SpeechRegions(std::vector<SpeechRegion>{})),
                  NoSpeechError);
  CHECK_THROWS_AS(SpeechRegions({{5.0, 4.0}}), FormatError);
  CHECK_THROWS_AS(SpeechRegions({{0.0, 4.0}, {3.0, 6.0}}), FormatError);
}

TEST_CASE("map_frames_back examples") {
  CHECK(map_frames_back(FrameMap::identity(10), 7) == 7);
  const FrameMap fm({{0, 0, 100}, {100, 200, 50}});
  CHECK(map_frames_back(fm, 100) == 200);
  CHECK(map_frames_back(fm, 99) == 99);
  CHECK_THROWS_AS(map_frames_back(fm, 150), std::out_of_range);
  CHECK_THROWS_AS(map_frames_back(fm, -1), std::out_of_range);
}

TEST_CASE("map_frames_back equals a lookup table for random removals") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int frames = 50 + static_cast<int>(rng() % 400);
    const auto pm = uniform_matrix(frames);
    // Random speech regions in seconds, gaps of random length.
    std::vector<SpeechRegion> regions;
    double t = uniform01(rng) * 0.5;
    const double total = frames * 0.02;
    while (t < total) {
      const double end = std::min(total, t + 0.02 + uniform01(rng) * 1.5);
      regions.push_back({t, end});
      t = end + 0.02 + uniform01(rng) * 1.5;
    }
    const double max_gap = 0.1 + uniform01(rng) * 0.8;
    CompressedPosteriors cp{pm, FrameMap::identity(frames)};
    try {
      cp = apply_speech_regions(pm, SpeechRegions(regions), max_gap);
    } catch (const NoSpeechError &) {
      continue;
    }
    // Brute force: a frame is dropped when it lies fully inside a gap longer
    // than max_gap.
    std::vector<std::pair<double, double>> gaps;
    double prev = 0.0;
    for (const auto &r : regions) {
      gaps.push_back({prev, r.start_s});
      prev = r.end_s;
    }
    gaps.push_back({prev, total});
    std::vector<int> table;
    for (int f = 0; f < frames; ++f) {
      bool drop = false;
      for (const auto &[a, b] : gaps)
        if (b - a > max_gap && f * 0.02 >= a - 1e-9 && (f + 1) * 0.02 <= b + 1e-9) drop = true;
      if (!drop) table.push_back(f);
    }
    REQUIRE(cp.posteriors.frames() == static_cast<int>(table.size()));
    for (int c = 0; c < static_cast<int>(table.size()); ++c) {
      REQUIRE(map_frames_back(cp.frame_map, c) == table[c]);
      if (c > 0) REQUIRE(map_frames_back(cp.frame_map, c) > map_frames_back(cp.frame_map, c - 1));
    }
  }
}

TEST_CASE("speech regions file") {
  const auto dir = temp_dir("regions");
  write_text(dir / "a.regions", "# comment\n0.5 2.0\n3.0 4.5\n");
  const auto sr = load_speech_regions(dir / "a.regions");
  REQUIRE(sr.regions().size() == 2);
  CHECK(sr.regions()[1].end_s == 4.5);
  write_text(dir / "b.regions", "0.5\n");
  CHECK_THROWS_AS(load_speech_regions(dir / "b.regions"), FormatError);
}
