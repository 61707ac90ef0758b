// synthdata.cc

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

#include "anchor_align/synthdata.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "anchor_align/errors.h"
#include "anchor_align/utf8.h"

namespace anchor_align {

namespace {

constexpr std::array<const char *, 160> kWords = {
    "el", "la", "los", "las", "un", "una", "de", "del", "en", "con", "por", "para",
    "que", "y", "o", "pero", "como", "más", "muy", "ya", "también", "aquí", "ahora",
    "hoy", "mañana", "ayer", "siempre", "nunca", "después", "antes", "mientras",
    "gobierno", "ciudad", "país", "mundo", "tiempo", "año", "día", "noche", "semana",
    "programa", "noticias", "información", "presidente", "ministro", "alcalde",
    "equipo", "partido", "jugador", "entrenador", "temporada", "público", "familia",
    "niños", "mujeres", "hombres", "gente", "trabajo", "empresa", "economía",
    "mercado", "precio", "euros", "millones", "política", "elecciones", "votos",
    "calle", "plaza", "barrio", "pueblo", "región", "norte", "sur", "costa",
    "montaña", "río", "lluvia", "sol", "viento", "tormenta", "temperatura", "grados",
    "hospital", "médico", "salud", "vacuna", "escuela", "universidad", "estudiantes",
    "música", "película", "canción", "artista", "teatro", "libro", "historia",
    "dice", "dijo", "explica", "asegura", "cree", "piensa", "quiere", "puede",
    "tiene", "hace", "llega", "sale", "vuelve", "empieza", "termina", "sigue",
    "nuevo", "nueva", "grande", "pequeño", "importante", "difícil", "fácil",
    "primero", "último", "próximo", "mejor", "peor", "rápido", "tranquilo",
    "española", "madrid", "valencia", "sevilla", "galicia", "canarias", "europa",
    "pingüino", "cigüeña", "acción", "razón", "corazón", "sí", "también", "así",
    "veinte", "treinta", "cien", "mil", "dos", "tres", "cuatro", "cinco",
    "reunión", "acuerdo", "problema", "solución", "situación", "momento",
    "pregunta", "respuesta", "verdad", "camino"};

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Text tokens of a normalized text; ' ' marks the separator.
std::u32string text_tokens(const std::string &text) { return utf8::decode(text); }

}  // namespace

double uniform01(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int placement_units(const std::string &text) {
  const auto toks = text_tokens(text);
  int units = static_cast<int>(toks.size());
  for (std::size_t i = 1; i < toks.size(); ++i)
    if (toks[i] == toks[i - 1]) ++units;
  return units;
}

SynthResult synth_posteriors(const SynthSpec &spec, const Vocab &vocab) {
  const double fd = spec.frame_duration_s;
  if (!(fd > 0.0)) throw std::invalid_argument("frame duration must be positive");
  if (!(spec.peak_prob > 0.5 && spec.peak_prob <= 1.0))
    throw std::invalid_argument("peak_prob must lie in (0.5, 1]");
  if (spec.utterances.empty()) throw std::invalid_argument("synth spec has no utterances");

  const int blank = vocab.blank_index();
  const int sep = vocab.separator_index();
  const double total_s = spec.total_s > 0.0 ? spec.total_s : spec.utterances.back().end_s + 1.0;
  const int frames = static_cast<int>(std::lround(total_s / fd));
  std::vector<int> schedule(frames, blank);
  std::vector<GroundTruth> truth;

  int prev_end = -1;
  for (std::size_t u = 0; u < spec.utterances.size(); ++u) {
    const auto &utt = spec.utterances[u];
    const std::string where = "synth utterance " + std::to_string(u);
    if (!(utt.end_s > utt.start_s)) throw std::invalid_argument(where + ": end <= start");
    const int start_f = static_cast<int>(std::lround(utt.start_s / fd));
    const int end_f = static_cast<int>(std::lround(utt.end_s / fd)) - 1;
    if (start_f <= prev_end) throw std::invalid_argument(where + ": overlaps previous span");
    if (end_f >= frames) throw std::invalid_argument(where + ": beyond end of audio");

    const std::string norm = normalize_text(utt.text, vocab);
    const auto toks = text_tokens(norm);
    const int units = placement_units(norm);
    const int span = end_f - start_f + 1;
    if (span < units)
      throw std::invalid_argument(where + ": span too short for its " +
                                  std::to_string(toks.size()) + " characters");
    int unit = 0;
    int first = -1, last = -1;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i > 0 && toks[i] == toks[i - 1]) ++unit;
      const int f = units == 1 ? start_f
                               : start_f + static_cast<int>(static_cast<long long>(unit) *
                                                            (span - 1) / (units - 1));
      schedule[f] = toks[i] == U' ' ? sep : *vocab.index_of(toks[i]);
      if (first < 0) first = f;
      last = f;
      ++unit;
    }
    // Word boundary between this utterance and the previous one.
    if (prev_end >= 0 && start_f - prev_end - 1 >= 3) schedule[(prev_end + start_f) / 2] = sep;
    truth.push_back({static_cast<int>(u), first, last});
    prev_end = end_f;
  }

  Rng rng(spec.noise_seed);
  const int v = vocab.size();
  const double rest = 1.0 - spec.peak_prob;
  std::vector<double> data(static_cast<std::size_t>(frames) * v);
  std::vector<double> weights(v);
  for (int t = 0; t < frames; ++t) {
    double wsum = 0.0;
    for (int c = 0; c < v; ++c) {
      weights[c] = c == schedule[t] ? 0.0 : 0.5 + uniform01(rng);
      wsum += weights[c];
    }
    double *row = data.data() + static_cast<std::size_t>(t) * v;
    for (int c = 0; c < v; ++c)
      row[c] = c == schedule[t] ? std::log(spec.peak_prob) : std::log(rest * weights[c] / wsum);
  }
  return {PosteriorMatrix(std::move(data), frames, v, fd, vocab.checksum()), std::move(truth)};
}

SynthSpec parse_manifest(const std::string &content) {
  SynthSpec spec;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  struct Pending {
    double start;
    std::string end;
    std::string text, transcript;
    int lineno;
  };
  std::vector<Pending> pending;
  auto fail = [&](const std::string &msg) {
    throw FormatError("manifest line " + std::to_string(lineno) + ": " + msg);
  };
  auto number = [&](const std::string &s) {
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) fail("bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '#') {
      if (first == "#") continue;  // comment
      std::string value, extra;
      if (!(ls >> value) || (ls >> extra)) fail("directive needs exactly one value");
      if (first == "#seed") {
        spec.noise_seed = static_cast<std::uint64_t>(number(value));
      } else if (first == "#peak") {
        spec.peak_prob = number(value);
      } else if (first == "#rate") {
        spec.char_rate = number(value);
      } else if (first == "#frame") {
        spec.frame_duration_s = number(value);
      } else if (first == "#duration") {
        spec.total_s = number(value);
      } else {
        fail("unknown directive " + first);
      }
      continue;
    }
    std::string end;
    if (!(ls >> end)) fail("expected 'start_s end_s text'");
    std::string rest;
    std::getline(ls, rest);
    Pending p{number(first), end, "", "", lineno};
    const auto bar = rest.find('|');
    p.text = bar == std::string::npos ? rest : rest.substr(0, bar);
    if (bar != std::string::npos) p.transcript = rest.substr(bar + 1);
    auto trim = [](std::string &s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
    };
    trim(p.text);
    trim(p.transcript);
    if (p.text.empty()) fail("utterance has no text");
    pending.push_back(std::move(p));
  }
  if (pending.empty()) throw FormatError("manifest has no utterances");
  if (!(spec.char_rate > 0.0)) throw FormatError("manifest: #rate must be positive");
  for (const auto &p : pending) {
    lineno = p.lineno;
    SynthUtterance u;
    u.text = p.text;
    u.transcript = p.transcript;
    u.start_s = p.start;
    // '-' derives the end from the character rate.
    u.end_s = p.end == "-"
                  ? p.start + static_cast<double>(placement_units(p.text)) / spec.char_rate
                  : number(p.end);
    if (!(u.end_s > u.start_s)) fail("end must be after start");
    spec.utterances.push_back(std::move(u));
  }
  return spec;
}

SynthSpec load_manifest(const std::filesystem::path &path) {
  return parse_manifest(read_file(path));
}

OracleResult oracle_best_path(const PosteriorSlice &window, const TokenSequence &ts,
                              const TrellisOptions &opts) {
  const int frames = window.frames();
  const int cols = ts.num_columns();
  const int final_col = cols - 1;
  if (frames > kOracleMaxFrames || cols > kOracleMaxColumns)
    throw std::invalid_argument("instance too large for exhaustive search");
  auto symbol = [&](int j) { return j < final_col ? ts.tokens[j - 1] : ts.blank; };

  bool found = false;
  OracleResult best{kLogZero, {}};
  std::vector<int> path;
  path.reserve(frames);

  // Reversed-path comparison: at the first differing frame walking back from
  // the end, the path sitting in the lower column took the advance.
  auto prefers = [](const std::vector<int> &a, const std::vector<int> &b) {
    for (int f = static_cast<int>(a.size()) - 1; f >= 0; --f)
      if (a[f] != b[f]) return a[f] < b[f];
    return false;
  };
  auto consider = [&](double score) {
    const int psi = static_cast<int>(path.size()) - 1;
    const int best_psi = static_cast<int>(best.path.size()) - 1;
    bool take = !found || score > best.log_prob;
    if (found && score == best.log_prob) {
      if (psi < best_psi) take = true;
      if (psi == best_psi && prefers(path, best.path)) take = true;
    }
    if (take) {
      best.log_prob = score;
      best.path = path;
      found = true;
    }
  };

  std::function<void(int, int, double)> walk = [&](int f, int j, double score) {
    if (f == frames) return;
    const double lp_blank = window.at(f, ts.blank);
    // stay
    if (j == 0) {
      path.push_back(0);
      walk(f + 1, 0, score);
      path.pop_back();
    } else {
      double cost = lp_blank;
      if (opts.stay_on_char && j < final_col) cost = std::max(lp_blank, window.at(f, symbol(j)));
      const double s = score + cost;
      path.push_back(j);
      if (j == final_col) consider(s);
      walk(f + 1, j, s);
      path.pop_back();
    }
    // advance
    if (j < final_col) {
      const double s = score + window.at(f, symbol(j + 1));
      path.push_back(j + 1);
      if (j + 1 == final_col) consider(s);
      walk(f + 1, j + 1, s);
      path.pop_back();
    }
  };
  walk(0, 0, 0.0);
  if (!found || best.log_prob == kLogZero) throw NoPathError("no path reaches the final blank");
  return best;
}

std::string spanish_vocab_text() {
  std::vector<std::string> syms = {"<pad>", "<s>", "</s>", "<unk>", "|"};
  for (char c = 'a'; c <= 'z'; ++c) syms.emplace_back(1, c);
  for (const char *s : {"ñ", "á", "é", "í", "ó", "ú", "ü"}) syms.emplace_back(s);
  std::string out = "#blank 0\n#separator 4\n";
  for (std::size_t i = 0; i < syms.size(); ++i) out += std::to_string(i) + "\t" + syms[i] + "\n";
  return out;
}

Vocab spanish_vocab() { return parse_vocab(spanish_vocab_text()); }

std::string random_sentence(Rng &rng, int num_words) {
  std::string out;
  for (int i = 0; i < num_words; ++i) {
    if (i) out += ' ';
    out += kWords[rng() % kWords.size()];
  }
  return out;
}

std::string unrelated_text(Rng &rng, int num_chars) {
  std::u32string out;
  while (static_cast<int>(out.size()) < num_chars) {
    if (!out.empty()) out.push_back(U' ');
    out += utf8::decode(kWords[rng() % kWords.size()]);
  }
  out.resize(num_chars);
  while (!out.empty() && out.back() == U' ') out.back() = U'a';
  return utf8::encode(out);
}

SynthSpec random_corpus(const CorpusOptions &opts) {
  if (opts.num_utterances < 1) throw std::invalid_argument("need at least one utterance");
  Rng rng(opts.seed);
  const double fd = opts.frame_duration_s;
  std::vector<std::string> texts;
  std::vector<int> span_frames;
  long long speech_frames = 0;
  for (int i = 0; i < opts.num_utterances; ++i) {
    const int words = opts.min_words +
                      static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                   opts.max_words - opts.min_words + 1));
    texts.push_back(random_sentence(rng, words));
    const int units = placement_units(texts.back());
    const int span = std::max(units, static_cast<int>(std::ceil(units / (opts.char_rate * fd))));
    span_frames.push_back(span);
    speech_frames += span;
  }
  const int total_frames = static_cast<int>(std::lround(opts.duration_s / fd));
  const int lead = static_cast<int>(std::lround(opts.lead_s / fd));
  const int min_gap = static_cast<int>(std::lround(opts.min_gap_s / fd));
  // One gap after each utterance; the trailing one pads the file end.
  const long long free_frames =
      total_frames - lead - speech_frames - static_cast<long long>(min_gap) * opts.num_utterances;
  if (free_frames < 0) throw std::invalid_argument("corpus does not fit in the requested duration");
  std::vector<double> w(opts.num_utterances);
  double wsum = 0.0;
  for (auto &x : w) wsum += (x = 0.5 + uniform01(rng));

  SynthSpec spec;
  spec.frame_duration_s = fd;
  spec.peak_prob = opts.peak_prob;
  spec.noise_seed = rng();
  spec.char_rate = opts.char_rate;
  spec.total_s = total_frames * fd;
  long long cursor = lead;
  for (int i = 0; i < opts.num_utterances; ++i) {
    SynthUtterance u;
    u.text = texts[i];
    u.start_s = cursor * fd;
    u.end_s = (cursor + span_frames[i]) * fd;
    spec.utterances.push_back(std::move(u));
    cursor += span_frames[i] + min_gap + static_cast<long long>(std::floor(free_frames * w[i] / wsum));
  }
  return spec;
}

}  // namespace anchor_align
