#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "enkf_lstm/detail/io.hpp"
#include "enkf_lstm/errors.hpp"
#include "enkf_lstm/ppca.hpp"

namespace enkf_lstm {

struct Record {
  std::int64_t ts = 0;  // epoch seconds
  std::string text;
};

namespace detail {

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Multi-byte whitespace this tokenizer recognizes: NBSP, the U+2000..U+200A
// range, line/paragraph separators, and ideographic space.
inline bool is_unicode_space(const std::string& s, std::size_t i, std::size_t& len) {
  const auto b = [&](std::size_t k) { return static_cast<unsigned char>(s[i + k]); };
  if (is_space_byte(b(0))) {
    len = 1;
    return true;
  }
  if (i + 1 < s.size() && b(0) == 0xC2 && b(1) == 0xA0) {
    len = 2;
    return true;
  }
  if (i + 2 < s.size() && b(0) == 0xE2 && b(1) == 0x80 &&
      ((b(2) >= 0x80 && b(2) <= 0x8A) || b(2) == 0xA8 || b(2) == 0xA9)) {
    len = 3;
    return true;
  }
  if (i + 2 < s.size() && b(0) == 0xE3 && b(1) == 0x80 && b(2) == 0x80) {
    len = 3;
    return true;
  }
  len = 1;
  return false;
}

inline bool is_ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c); }

}  // namespace detail

// Lowercase, split on whitespace, drop URLs and @-mentions, strip a leading
// '#', then strip leading/trailing ASCII punctuation.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> raw;
  std::string cur;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len = 1;
    if (detail::is_unicode_space(text, i, len)) {
      if (!cur.empty()) raw.push_back(std::move(cur)), cur.clear();
      i += len;
    } else {
      unsigned char c = static_cast<unsigned char>(text[i]);
      cur.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : text[i]);
      ++i;
    }
  }
  if (!cur.empty()) raw.push_back(std::move(cur));

  std::vector<std::string> out;
  out.reserve(raw.size());
  for (auto& tok : raw) {
    if (tok.rfind("http://", 0) == 0 || tok.rfind("https://", 0) == 0 ||
        tok.rfind("www.", 0) == 0)
      continue;
    if (tok.size() > 1 && tok[0] == '@') continue;
    if (!tok.empty() && tok[0] == '#') tok.erase(0, 1);
    std::size_t b = 0, e = tok.size();
    while (b < e && detail::is_ascii_punct(static_cast<unsigned char>(tok[b]))) ++b;
    while (e > b && detail::is_ascii_punct(static_cast<unsigned char>(tok[e - 1]))) --e;
    if (e > b) out.push_back(tok.substr(b, e - b));
  }
  return out;
}

struct WordVectorTable {
  Eigen::Index dim = 0;
  std::unordered_map<std::string, Eigen::VectorXd> entries;
  std::size_t skipped_lines = 0;

  const Eigen::VectorXd* lookup(const std::string& token) const {
    auto it = entries.find(token);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// GloVe text format: token followed by dim space-separated floats per line.
// The first well-formed line fixes the dimension; malformed lines are
// skipped and counted.
inline WordVectorTable load_word_vectors(const std::string& path) {
  auto in = detail::open_input(path);
  WordVectorTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0) {
      ++table.skipped_lines;
      continue;
    }
    std::string token = line.substr(0, sp);
    for (char& c : token)
      if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(c));
    std::vector<double> vals;
    bool bad = false;
    std::size_t pos = sp + 1;
    while (pos <= line.size() && !bad) {
      std::size_t next = line.find(' ', pos);
      const std::string field =
          line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      if (!field.empty()) {
        try {
          std::size_t used = 0;
          vals.push_back(std::stod(field, &used));
          if (used != field.size()) bad = true;
        } catch (const std::exception&) {
          bad = true;
        }
      }
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (bad || vals.empty() ||
        (table.dim != 0 && static_cast<Eigen::Index>(vals.size()) != table.dim)) {
      ++table.skipped_lines;
      continue;
    }
    if (table.dim == 0) table.dim = static_cast<Eigen::Index>(vals.size());
    table.entries[token] =
        Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }
  if (table.entries.empty()) throw DataError("no usable word vectors in " + path);
  return table;
}

// Mean of the in-vocabulary token vectors; nullopt when every token misses.
inline std::optional<Eigen::VectorXd> sentence_embedding(const std::string& text,
                                                         const WordVectorTable& table) {
  if (table.dim < 1) throw ArgumentError("sentence_embedding: table not loaded");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim);
  Eigen::Index hits = 0;
  for (const auto& tok : tokenize(text)) {
    if (const Eigen::VectorXd* v = table.lookup(tok)) {
      sum += *v;
      ++hits;
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / double(hits);
}

struct WindowEmbedding {
  Eigen::Index index = 0;
  std::int64_t start_time = 0;
  Eigen::VectorXd vector;
  Eigen::Index n_sentences = 0;
};

// Contiguous fixed windows anchored at the first record's timestamp; a
// 12-minute span with 5-minute windows yields 3 windows (last one partial).
// Windows with no usable sentences carry zero vectors so the grid is gapless.
inline std::vector<WindowEmbedding> window_embeddings(std::vector<Record> records,
                                                      double window_minutes,
                                                      const WordVectorTable& table) {
  if (records.empty()) throw ArgumentError("window_embeddings: no records");
  const std::int64_t span = static_cast<std::int64_t>(std::llround(window_minutes * 60.0));
  if (span < 1) throw ArgumentError("window_embeddings: window length must be positive");
  std::stable_sort(records.begin(), records.end(),
                   [](const Record& a, const Record& b) { return a.ts < b.ts; });
  const std::int64_t t0 = records.front().ts;
  const Eigen::Index n_windows = (records.back().ts - t0) / span + 1;

  std::vector<WindowEmbedding> out(static_cast<std::size_t>(n_windows));
  for (Eigen::Index k = 0; k < n_windows; ++k) {
    out[static_cast<std::size_t>(k)].index = k;
    out[static_cast<std::size_t>(k)].start_time = t0 + k * span;
    out[static_cast<std::size_t>(k)].vector = Eigen::VectorXd::Zero(table.dim);
  }
  for (const Record& r : records) {
    if (auto emb = sentence_embedding(r.text, table)) {
      auto& w = out[static_cast<std::size_t>((r.ts - t0) / span)];
      w.vector += *emb;
      ++w.n_sentences;
    }
  }
  for (auto& w : out)
    if (w.n_sentences > 0) w.vector /= double(w.n_sentences);
  return out;
}

struct EmbeddingConfig {
  double window_minutes = 5.0;
  std::optional<Eigen::Index> latent_dim = 5;  // nullopt = auto at 99% variance
  bool fit_on_words = false;  // fit PPCA on corpus word vectors instead of windows
};

struct EmbeddingResult {
  std::vector<WindowEmbedding> windows;  // latent d-dim series
  PpcaModel ppca;
};

// Full pipeline: window the corpus in word-vector space, fit PPCA, project.
inline EmbeddingResult pipeline(const std::vector<Record>& records,
                                const WordVectorTable& table, const EmbeddingConfig& config) {
  EmbeddingResult res;
  std::vector<WindowEmbedding> wide = window_embeddings(records, config.window_minutes, table);

  Eigen::MatrixXd fit_data;
  if (config.fit_on_words) {
    std::unordered_set<std::string> seen;
    std::vector<const Eigen::VectorXd*> rows;
    for (const Record& r : records)
      for (const auto& tok : tokenize(r.text))
        if (const Eigen::VectorXd* v = table.lookup(tok))
          if (seen.insert(tok).second) rows.push_back(v);
    if (rows.size() < 2)
      throw DegenerateDataError("pipeline: fewer than 2 in-vocabulary tokens to fit on");
    fit_data.resize(static_cast<Eigen::Index>(rows.size()), table.dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
      fit_data.row(static_cast<Eigen::Index>(i)) = rows[i]->transpose();
  } else {
    fit_data.resize(static_cast<Eigen::Index>(wide.size()), table.dim);
    for (std::size_t i = 0; i < wide.size(); ++i)
      fit_data.row(static_cast<Eigen::Index>(i)) = wide[i].vector.transpose();
  }

  res.ppca = fit_ppca(fit_data, config.latent_dim);
  res.windows.reserve(wide.size());
  for (const auto& w : wide) {
    WindowEmbedding e;
    e.index = w.index;
    e.start_time = w.start_time;
    e.n_sentences = w.n_sentences;
    e.vector = transform(res.ppca, w.vector);
    res.windows.push_back(std::move(e));
  }
  return res;
}

// Projects a fresh record stream through an already-fitted PPCA model, for
// detection runs that must live in the training model's latent space.
inline std::vector<WindowEmbedding> pipeline_with_model(const std::vector<Record>& records,
                                                        const WordVectorTable& table,
                                                        double window_minutes,
                                                        const PpcaModel& ppca) {
  std::vector<WindowEmbedding> wide = window_embeddings(records, window_minutes, table);
  for (auto& w : wide) w.vector = transform(ppca, w.vector);
  return wide;
}

// --- window CSV: index,start_time,n_sentences,v1..vd ---

inline void write_windows_csv(const std::string& path,
                              const std::vector<WindowEmbedding>& windows) {
  if (windows.empty()) throw ArgumentError("write_windows_csv: empty series");
  auto out = detail::open_output(path);
  const Eigen::Index d = windows.front().vector.size();
  out << "index,start_time,n_sentences";
  for (Eigen::Index i = 1; i <= d; ++i) out << ",v" << i;
  out << '\n';
  for (const auto& w : windows) {
    out << w.index << ',' << detail::format_iso8601(w.start_time) << ',' << w.n_sentences;
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << detail::format_double(w.vector(i));
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<WindowEmbedding> read_windows_csv(const std::string& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty window CSV: " + path);
  const auto header = detail::split_csv_line(line);
  if (header.size() < 4 || header[0] != "index")
    throw DataError("unexpected window CSV header in " + path);
  const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 3;
  std::vector<WindowEmbedding> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (static_cast<Eigen::Index>(f.size()) != d + 3)
      throw DataError("bad field count in " + path + ": '" + line + "'");
    WindowEmbedding w;
    w.index = detail::parse_i64_field(f[0], path);
    w.start_time = detail::parse_iso8601(f[1]);
    w.n_sentences = detail::parse_i64_field(f[2], path);
    w.vector.resize(d);
    for (Eigen::Index i = 0; i < d; ++i)
      w.vector(i) = detail::parse_double_field(f[static_cast<std::size_t>(i) + 3], path);
    out.push_back(std::move(w));
  }
  if (out.empty()) throw DataError("no windows in " + path);
  return out;
}

inline Eigen::MatrixXd windows_matrix(const std::vector<WindowEmbedding>& windows) {
  if (windows.empty()) throw ArgumentError("windows_matrix: empty series");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(windows.size()), windows.front().vector.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].vector.size() != m.cols())
      throw ShapeError("windows_matrix: inconsistent vector lengths");
    m.row(static_cast<Eigen::Index>(i)) = windows[i].vector.transpose();
  }
  return m;
}

}  // namespace enkf_lstm
