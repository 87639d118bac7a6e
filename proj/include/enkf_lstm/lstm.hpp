#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "enkf_lstm/detail/io.hpp"
#include "enkf_lstm/errors.hpp"

namespace enkf_lstm {

struct LstmShape {
  Eigen::Index input_dim = 5;
  Eigen::Index hidden_dim = 32;
  Eigen::Index output_dim = 5;
  bool operator==(const LstmShape&) const = default;
};

inline void validate_shape(const LstmShape& s) {
  if (s.input_dim < 1 || s.hidden_dim < 1 || s.output_dim < 1)
    throw ShapeError("LSTM dimensions must all be >= 1");
}

inline Eigen::Index weight_count(const LstmShape& s) {
  validate_shape(s);
  return 4 * s.hidden_dim * (s.input_dim + s.hidden_dim + 1) +
         s.output_dim * (s.hidden_dim + 1);
}

namespace detail {

// Flat layout: [W_ix, W_im, b_i, W_fx, W_fm, b_f, W_cx, W_cm, b_c,
//               W_ox, W_om, b_o, W_ym, b_y], each matrix row-major.
struct BlockOffsets {
  Eigen::Index ix, im, bi, fx, fm, bf, cx, cm, bc, ox, om, bo, ym, by, total;
  explicit BlockOffsets(const LstmShape& s) {
    const Eigen::Index p = s.input_dim, h = s.hidden_dim, q = s.output_dim;
    Eigen::Index off = 0;
    auto take = [&off](Eigen::Index n) {
      Eigen::Index at = off;
      off += n;
      return at;
    };
    ix = take(h * p); im = take(h * h); bi = take(h);
    fx = take(h * p); fm = take(h * h); bf = take(h);
    cx = take(h * p); cm = take(h * h); bc = take(h);
    ox = take(h * p); om = take(h * h); bo = take(h);
    ym = take(q * h); by = take(q);
    total = off;
  }
};

}  // namespace detail

struct WeightVector {
  LstmShape shape;
  Eigen::VectorXd values;

  WeightVector() = default;
  WeightVector(LstmShape s, Eigen::VectorXd v) : shape(s), values(std::move(v)) {
    if (values.size() != weight_count(shape))
      throw ShapeError("weight vector length " + std::to_string(values.size()) +
                       " does not match weight_count " + std::to_string(weight_count(shape)));
  }

  static WeightVector zeros(LstmShape s) {
    return WeightVector(s, Eigen::VectorXd::Zero(weight_count(s)));
  }
};

inline void validate_finite(const WeightVector& w) {
  if (!w.values.allFinite()) throw NumericalError("weight vector has non-finite entries");
}

// Zero-copy structured view over a flat weight buffer.
struct WeightView {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<const RowMat>;
  using VecMap = Eigen::Map<const Eigen::VectorXd>;

  MatMap W_ix, W_im; VecMap b_i;
  MatMap W_fx, W_fm; VecMap b_f;
  MatMap W_cx, W_cm; VecMap b_c;
  MatMap W_ox, W_om; VecMap b_o;
  MatMap W_ym; VecMap b_y;

  WeightView(const double* w, const LstmShape& s)
      : WeightView(w, s, detail::BlockOffsets(s)) {}
  explicit WeightView(const WeightVector& w) : WeightView(w.values.data(), w.shape) {}

 private:
  WeightView(const double* w, const LstmShape& s, const detail::BlockOffsets& o)
      : W_ix(w + o.ix, s.hidden_dim, s.input_dim),
        W_im(w + o.im, s.hidden_dim, s.hidden_dim),
        b_i(w + o.bi, s.hidden_dim),
        W_fx(w + o.fx, s.hidden_dim, s.input_dim),
        W_fm(w + o.fm, s.hidden_dim, s.hidden_dim),
        b_f(w + o.bf, s.hidden_dim),
        W_cx(w + o.cx, s.hidden_dim, s.input_dim),
        W_cm(w + o.cm, s.hidden_dim, s.hidden_dim),
        b_c(w + o.bc, s.hidden_dim),
        W_ox(w + o.ox, s.hidden_dim, s.input_dim),
        W_om(w + o.om, s.hidden_dim, s.hidden_dim),
        b_o(w + o.bo, s.hidden_dim),
        W_ym(w + o.ym, s.output_dim, s.hidden_dim),
        b_y(w + o.by, s.output_dim) {}
};

// Owned gate matrices, convenient for construction; pack() flattens them.
struct LstmParts {
  Eigen::MatrixXd W_ix, W_im; Eigen::VectorXd b_i;
  Eigen::MatrixXd W_fx, W_fm; Eigen::VectorXd b_f;
  Eigen::MatrixXd W_cx, W_cm; Eigen::VectorXd b_c;
  Eigen::MatrixXd W_ox, W_om; Eigen::VectorXd b_o;
  Eigen::MatrixXd W_ym; Eigen::VectorXd b_y;

  static LstmParts zeros(const LstmShape& s) {
    validate_shape(s);
    LstmParts p;
    auto zm = [](Eigen::Index r, Eigen::Index c) { return Eigen::MatrixXd::Zero(r, c); };
    const Eigen::Index pi = s.input_dim, h = s.hidden_dim, q = s.output_dim;
    p.W_ix = zm(h, pi); p.W_im = zm(h, h); p.b_i = Eigen::VectorXd::Zero(h);
    p.W_fx = zm(h, pi); p.W_fm = zm(h, h); p.b_f = Eigen::VectorXd::Zero(h);
    p.W_cx = zm(h, pi); p.W_cm = zm(h, h); p.b_c = Eigen::VectorXd::Zero(h);
    p.W_ox = zm(h, pi); p.W_om = zm(h, h); p.b_o = Eigen::VectorXd::Zero(h);
    p.W_ym = zm(q, h);  p.b_y = Eigen::VectorXd::Zero(q);
    return p;
  }

  LstmShape shape() const {
    LstmShape s{W_ix.cols(), W_ix.rows(), W_ym.rows()};
    validate_shape(s);
    const Eigen::Index p = s.input_dim, h = s.hidden_dim, q = s.output_dim;
    auto ok_mat = [](const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c) {
      return m.rows() == r && m.cols() == c;
    };
    bool consistent =
        ok_mat(W_im, h, h) && b_i.size() == h &&
        ok_mat(W_fx, h, p) && ok_mat(W_fm, h, h) && b_f.size() == h &&
        ok_mat(W_cx, h, p) && ok_mat(W_cm, h, h) && b_c.size() == h &&
        ok_mat(W_ox, h, p) && ok_mat(W_om, h, h) && b_o.size() == h &&
        ok_mat(W_ym, q, h) && b_y.size() == q;
    if (!consistent) throw ShapeError("inconsistent LSTM part dimensions");
    return s;
  }
};

inline WeightVector pack(const LstmParts& parts) {
  const LstmShape s = parts.shape();
  Eigen::VectorXd v(weight_count(s));
  const detail::BlockOffsets o(s);
  using RowMap = Eigen::Map<WeightView::RowMat>;
  auto put_mat = [&](Eigen::Index off, const Eigen::MatrixXd& m) {
    RowMap(v.data() + off, m.rows(), m.cols()) = m;
  };
  auto put_vec = [&](Eigen::Index off, const Eigen::VectorXd& b) {
    Eigen::Map<Eigen::VectorXd>(v.data() + off, b.size()) = b;
  };
  put_mat(o.ix, parts.W_ix); put_mat(o.im, parts.W_im); put_vec(o.bi, parts.b_i);
  put_mat(o.fx, parts.W_fx); put_mat(o.fm, parts.W_fm); put_vec(o.bf, parts.b_f);
  put_mat(o.cx, parts.W_cx); put_mat(o.cm, parts.W_cm); put_vec(o.bc, parts.b_c);
  put_mat(o.ox, parts.W_ox); put_mat(o.om, parts.W_om); put_vec(o.bo, parts.b_o);
  put_mat(o.ym, parts.W_ym); put_vec(o.by, parts.b_y);
  return WeightVector(s, std::move(v));
}

inline LstmParts unpack(const WeightVector& w) {
  const WeightView view(w);
  LstmParts p;
  p.W_ix = view.W_ix; p.W_im = view.W_im; p.b_i = view.b_i;
  p.W_fx = view.W_fx; p.W_fm = view.W_fm; p.b_f = view.b_f;
  p.W_cx = view.W_cx; p.W_cm = view.W_cm; p.b_c = view.b_c;
  p.W_ox = view.W_ox; p.W_om = view.W_om; p.b_o = view.b_o;
  p.W_ym = view.W_ym; p.b_y = view.b_y;
  return p;
}

inline LstmParts unpack(const Eigen::VectorXd& v, const LstmShape& s) {
  return unpack(WeightVector(s, v));
}

struct LstmState {
  Eigen::VectorXd cell;         // c_t
  Eigen::VectorXd cell_output;  // m_t

  static LstmState zero(const LstmShape& s) {
    validate_shape(s);
    return {Eigen::VectorXd::Zero(s.hidden_dim), Eigen::VectorXd::Zero(s.hidden_dim)};
  }
};

// Reusable buffers for batched propagation: one weight vector applied to k
// independent sequences at once, so every gate becomes a (h x k) GEMM.
struct LstmWork {
  Eigen::MatrixXd m, c;                // h x k running state
  Eigen::MatrixXd zi, zf, zg, zo, tmp; // h x k gate buffers
  Eigen::MatrixXd y;                   // q x k output head

  void reset(const LstmShape& s, Eigen::Index k) {
    auto setz = [&](Eigen::MatrixXd& mat, Eigen::Index r) {
      if (mat.rows() != r || mat.cols() != k) mat.resize(r, k);
      mat.setZero();
    };
    setz(m, s.hidden_dim);
    setz(c, s.hidden_dim);
    setz(zi, s.hidden_dim);
    setz(zf, s.hidden_dim);
    setz(zg, s.hidden_dim);
    setz(zo, s.hidden_dim);
    setz(tmp, s.hidden_dim);
    setz(y, s.output_dim);
  }
};

namespace detail {

// Overflow-safe logistic sigmoid, elementwise in place: with a = exp(-|x|),
// sigma(x) = 1/(1+a) for x >= 0 and a/(1+a) otherwise.
inline void sigmoid_inplace(Eigen::MatrixXd& z, Eigen::MatrixXd& scratch) {
  scratch.array() = (-z.array().abs()).exp();
  z.array() = (z.array() >= 0.0)
                  .select(1.0 / (1.0 + scratch.array()),
                          scratch.array() / (1.0 + scratch.array()));
}

}  // namespace detail

// One time step for all k sequences. x is input_dim x k; state lives in work.
inline void step_batch(const WeightView& w, const Eigen::Ref<const Eigen::MatrixXd>& x,
                       LstmWork& wk) {
  wk.zi.noalias() = w.W_ix * x;
  wk.zi.noalias() += w.W_im * wk.m;
  wk.zi.colwise() += w.b_i;
  wk.zf.noalias() = w.W_fx * x;
  wk.zf.noalias() += w.W_fm * wk.m;
  wk.zf.colwise() += w.b_f;
  wk.zg.noalias() = w.W_cx * x;
  wk.zg.noalias() += w.W_cm * wk.m;
  wk.zg.colwise() += w.b_c;
  wk.zo.noalias() = w.W_ox * x;
  wk.zo.noalias() += w.W_om * wk.m;
  wk.zo.colwise() += w.b_o;

  detail::sigmoid_inplace(wk.zi, wk.tmp);
  detail::sigmoid_inplace(wk.zf, wk.tmp);
  wk.zg.array() = wk.zg.array().tanh();
  detail::sigmoid_inplace(wk.zo, wk.tmp);

  wk.c.array() = wk.zf.array() * wk.c.array() + wk.zi.array() * wk.zg.array();
  wk.tmp.array() = wk.c.array().tanh();
  wk.m.array() = wk.zo.array() * wk.tmp.array();
}

inline void output_batch(const WeightView& w, LstmWork& wk) {
  wk.y.noalias() = w.W_ym * wk.m;
  wk.y.colwise() += w.b_y;
}

// steps[t] holds the time-t inputs of all k sequences as columns (p x k).
// Folds from zero state and leaves the final-step outputs in wk.y (q x k).
inline void forward_batch(const WeightView& w, const LstmShape& shape,
                          const std::vector<Eigen::MatrixXd>& steps, LstmWork& wk) {
  if (steps.empty()) throw ArgumentError("forward_batch: empty sequence");
  wk.reset(shape, steps.front().cols());
  for (const auto& x : steps) {
    if (x.rows() != shape.input_dim || x.cols() != wk.m.cols())
      throw ShapeError("forward_batch: step input has wrong dimensions");
    step_batch(w, x, wk);
  }
  output_batch(w, wk);
}

inline std::pair<LstmState, Eigen::VectorXd> step(const LstmState& state,
                                                  const Eigen::VectorXd& x,
                                                  const WeightVector& w) {
  if (x.size() != w.shape.input_dim)
    throw ShapeError("step: input length " + std::to_string(x.size()) +
                     " does not match input_dim " + std::to_string(w.shape.input_dim));
  if (state.cell.size() != w.shape.hidden_dim || state.cell_output.size() != w.shape.hidden_dim)
    throw ShapeError("step: state length does not match hidden_dim");
  const WeightView view(w);
  LstmWork wk;
  wk.reset(w.shape, 1);
  wk.c.col(0) = state.cell;
  wk.m.col(0) = state.cell_output;
  step_batch(view, x, wk);
  output_batch(view, wk);
  return {LstmState{wk.c.col(0), wk.m.col(0)}, wk.y.col(0)};
}

// Many-to-one: fold the whole sequence, return the final-step output only.
inline Eigen::VectorXd forward_sequence(const std::vector<Eigen::VectorXd>& x_seq,
                                        const WeightVector& w, const LstmState& initial) {
  if (x_seq.empty()) throw ArgumentError("forward_sequence: empty sequence");
  const WeightView view(w);
  LstmWork wk;
  wk.reset(w.shape, 1);
  wk.c.col(0) = initial.cell;
  wk.m.col(0) = initial.cell_output;
  for (const auto& x : x_seq) {
    if (x.size() != w.shape.input_dim)
      throw ShapeError("forward_sequence: input length does not match input_dim");
    step_batch(view, x, wk);
  }
  output_batch(view, wk);
  return wk.y.col(0);
}

inline Eigen::VectorXd forward_sequence(const std::vector<Eigen::VectorXd>& x_seq,
                                        const WeightVector& w) {
  return forward_sequence(x_seq, w, LstmState::zero(w.shape));
}

// Row t of x_rows is the time-t input (sequence_len x input_dim).
inline Eigen::VectorXd forward_sequence(const Eigen::MatrixXd& x_rows, const WeightVector& w) {
  if (x_rows.rows() == 0) throw ArgumentError("forward_sequence: empty sequence");
  if (x_rows.cols() != w.shape.input_dim)
    throw ShapeError("forward_sequence: input width does not match input_dim");
  std::vector<Eigen::VectorXd> seq(static_cast<std::size_t>(x_rows.rows()));
  for (Eigen::Index t = 0; t < x_rows.rows(); ++t) seq[static_cast<std::size_t>(t)] = x_rows.row(t);
  return forward_sequence(seq, w);
}

// --- weight_vector_v1: one-line JSON shape header + little-endian doubles ---

inline void save_weights(const std::string& path, const WeightVector& w) {
  auto out = detail::open_output(path, true);
  nlohmann::json header{{"format", "weight_vector_v1"},
                        {"input_dim", w.shape.input_dim},
                        {"hidden_dim", w.shape.hidden_dim},
                        {"output_dim", w.shape.output_dim}};
  detail::write_json_header(out, header);
  detail::write_doubles(out, w.values.data(), static_cast<std::size_t>(w.values.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline WeightVector load_weights(const std::string& path) {
  auto in = detail::open_input(path, true);
  nlohmann::json h = detail::read_json_header(in, path);
  if (h.value("format", "") != "weight_vector_v1")
    throw IoError("unexpected format in " + path);
  LstmShape s{h.at("input_dim").get<Eigen::Index>(), h.at("hidden_dim").get<Eigen::Index>(),
              h.at("output_dim").get<Eigen::Index>()};
  Eigen::VectorXd v(weight_count(s));
  detail::read_doubles(in, v.data(), static_cast<std::size_t>(v.size()), path);
  return WeightVector(s, std::move(v));
}

}  // namespace enkf_lstm
