#include "aggmark/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aggmark/error.hpp"
#include "aggmark/iph.hpp"

namespace aggmark {

Vector ResetStructure::beta_at(int j, int k, double t) const {
  const auto& fs = beta.at(j).at(k);
  Vector out(static_cast<Eigen::Index>(fs.size()));
  for (std::size_t a = 0; a < fs.size(); ++a) out[a] = fs[a](t);
  return out;
}

RowVector ResetStructure::pi_at(int k, double t) const {
  const auto& fs = pi.at(k);
  RowVector out(static_cast<Eigen::Index>(fs.size()));
  for (std::size_t a = 0; a < fs.size(); ++a) out[a] = fs[a](t);
  return out;
}

bool ResetStructure::has_flow(int j, int k) const {
  if (j == k) return false;
  for (const auto& f : beta.at(j).at(k))
    if (!f.is_zero()) return true;
  return false;
}

std::string ValidationReport::summary(std::size_t max_lines) const {
  if (violations.empty()) return "ok";
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  for (std::size_t i = 0; i < violations.size() && i < max_lines; ++i)
    os << "\n  " << violations[i].message;
  if (violations.size() > max_lines) os << "\n  ...";
  return os.str();
}

AggregateModel::AggregateModel(std::vector<int> micro_counts, EntryGrid entries,
                               std::vector<double> initial,
                               std::optional<ResetStructure> reset)
    : counts_(std::move(micro_counts)),
      entries_(std::move(entries)),
      reset_(std::move(reset)) {
  if (counts_.empty()) throw DomainError("model needs at least one macrostate");
  for (int c : counts_) {
    if (c <= 0) throw DomainError("micro counts must be positive");
    offsets_.push_back(dbar_);
    dbar_ += c;
  }
  if (static_cast<int>(entries_.size()) != dbar_)
    throw DomainError("intensity table must have one row per microstate");
  for (const auto& row : entries_)
    if (static_cast<int>(row.size()) != dbar_)
      throw DomainError("intensity table must be square");
  for (int i = 0; i < dbar_; ++i)
    for (int j = 0; j < dbar_; ++j)
      if (i != j && entries_[i][j].kind == IntensityEntry::Kind::complement)
        throw DomainError("complement entries are only allowed on the diagonal");
  if (static_cast<int>(initial.size()) != counts_[0])
    throw DomainError("initial vector must have d_1 entries");
  initial_ = Eigen::Map<const RowVector>(initial.data(),
                                         static_cast<Eigen::Index>(initial.size()));
  if (reset_) {
    const int J = macrostates();
    if (static_cast<int>(reset_->beta.size()) != J ||
        static_cast<int>(reset_->pi.size()) != J)
      throw DomainError("reset structure must cover every macrostate");
    for (int j = 0; j < J; ++j) {
      if (static_cast<int>(reset_->beta[j].size()) != J)
        throw DomainError("reset beta must have one entry per destination");
      for (int k = 0; k < J; ++k) {
        const auto& b = reset_->beta[j][k];
        if (!b.empty() && (j == k || static_cast<int>(b.size()) != counts_[j]))
          throw DomainError("reset beta vector has the wrong length");
      }
      const auto& p = reset_->pi[j];
      if (!p.empty() && static_cast<int>(p.size()) != counts_[j])
        throw DomainError("reset pi vector has the wrong length");
    }
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < J; ++k)
        if (reset_->has_flow(j, k) && reset_->pi[k].empty())
          throw DomainError("reset pi missing for a macrostate that can be entered");
  }
  compile();
}

void AggregateModel::compile() {
  auto terms = std::make_shared<std::vector<Term>>();
  auto comp = std::make_shared<std::vector<int>>();
  for (int i = 0; i < dbar_; ++i)
    for (int j = 0; j < dbar_; ++j) {
      const auto& e = entries_[i][j];
      if (e.kind == IntensityEntry::Kind::function && !e.function.is_zero())
        terms->push_back({i, j, e.function});
      else if (e.kind == IntensityEntry::Kind::complement)
        comp->push_back(i);
    }
  terms_ = std::move(terms);
  complement_rows_ = std::move(comp);
}

AggregateModel AggregateModel::build_from_reset(
    std::vector<int> micro_counts, std::vector<EntryGrid> diagonal_blocks,
    ResetStructure reset, std::vector<double> initial) {
  const int J = static_cast<int>(micro_counts.size());
  if (static_cast<int>(diagonal_blocks.size()) != J)
    throw DomainError("one diagonal block per macrostate required");
  std::vector<int> offsets(J, 0);
  int dbar = 0;
  for (int j = 0; j < J; ++j) {
    if (micro_counts[j] <= 0) throw DomainError("micro counts must be positive");
    offsets[j] = dbar;
    dbar += micro_counts[j];
  }
  EntryGrid entries(dbar, std::vector<IntensityEntry>(dbar));
  for (int j = 0; j < J; ++j) {
    const auto& blk = diagonal_blocks[j];
    if (static_cast<int>(blk.size()) != micro_counts[j])
      throw DomainError("diagonal block has the wrong dimension");
    for (int a = 0; a < micro_counts[j]; ++a) {
      if (static_cast<int>(blk[a].size()) != micro_counts[j])
        throw DomainError("diagonal block has the wrong dimension");
      for (int b = 0; b < micro_counts[j]; ++b)
        entries[offsets[j] + a][offsets[j] + b] = blk[a][b];
    }
  }
  if (static_cast<int>(reset.beta.size()) != J ||
      static_cast<int>(reset.pi.size()) != J)
    throw DomainError("reset structure must cover every macrostate");
  for (int j = 0; j < J; ++j)
    for (int k = 0; k < J; ++k) {
      if (j == k || reset.beta[j].size() != static_cast<std::size_t>(J) ||
          reset.beta[j][k].empty())
        continue;
      const auto& beta = reset.beta[j][k];
      const auto& pi = reset.pi[k];
      if (static_cast<int>(beta.size()) != micro_counts[j] ||
          static_cast<int>(pi.size()) != micro_counts[k])
        throw DomainError("reset vectors have the wrong length");
      for (int a = 0; a < micro_counts[j]; ++a) {
        if (auto c = beta[a].constant_value(); c && *c < 0.0)
          throw DomainError("reset beta entries must be nonnegative");
        if (beta[a].is_zero()) continue;
        for (int b = 0; b < micro_counts[k]; ++b) {
          if (pi[b].is_zero()) continue;
          entries[offsets[j] + a][offsets[k] + b] =
              IntensityEntry::of(ScalarFunction::product({beta[a], pi[b]}));
        }
      }
    }
  AggregateModel m(std::move(micro_counts), std::move(entries), std::move(initial),
                   std::move(reset));
  m.blocks_from_reset_ = true;
  return m;
}

MicroIndex AggregateModel::index(int j, int micro) const {
  if (j < 0 || j >= macrostates() || micro < 0 || micro >= counts_[j])
    throw DomainError("microstate index out of range");
  return {j, micro, offsets_[j] + micro};
}

MicroIndex AggregateModel::index_of(int offset) const {
  if (offset < 0 || offset >= dbar_) throw DomainError("flat index out of range");
  int j = macrostates() - 1;
  while (offsets_[j] > offset) --j;
  return {j, offset - offsets_[j], offset};
}

const ResetStructure& AggregateModel::reset() const {
  if (!reset_) throw MisuseError("model has no reset structure");
  return *reset_;
}

void AggregateModel::set_names(std::vector<std::string> names) {
  if (!names.empty() && static_cast<int>(names.size()) != macrostates())
    throw DomainError("one name per macrostate required");
  names_ = std::move(names);
}

Matrix AggregateModel::intensity(double t) const {
  Matrix m = Matrix::Zero(dbar_, dbar_);
  for (const auto& term : *terms_) m(term.row, term.col) = term.f(t);
  for (int r : *complement_rows_) {
    double s = 0.0;
    for (int c = 0; c < dbar_; ++c)
      if (c != r) s += m(r, c);
    m(r, r) = -s;
  }
  return m;
}

Matrix AggregateModel::block(int j, int k, double t) const {
  const Matrix m = intensity(t);
  return m.block(offsets_.at(j), offsets_.at(k), counts_.at(j), counts_.at(k));
}

MatrixFunction AggregateModel::intensity_function() const {
  AggregateModel self = *this;
  return MatrixFunction(dbar_, [self](double t) { return self.intensity(t); });
}

MatrixFunction AggregateModel::diagonal_block_function(int j) const {
  AggregateModel self = *this;
  const int off = offsets_.at(j);
  const int d = counts_.at(j);
  return MatrixFunction(d, [self, off, d](double t) -> Matrix {
    return self.intensity(t).block(off, off, d, d);
  });
}

MatrixFunction AggregateModel::block_diagonal_function() const {
  AggregateModel self = *this;
  return MatrixFunction(dbar_, [self](double t) -> Matrix {
    const Matrix full = self.intensity(t);
    Matrix out = Matrix::Zero(full.rows(), full.cols());
    for (int j = 0; j < self.macrostates(); ++j) {
      const int off = self.offset(j);
      const int d = self.micro_count(j);
      out.block(off, off, d, d) = full.block(off, off, d, d);
    }
    return out;
  });
}

std::vector<double> AggregateModel::breakpoints() const {
  std::vector<double> out;
  for (const auto& term : *terms_) {
    auto b = term.f.breakpoints();
    out.insert(out.end(), b.begin(), b.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool AggregateModel::block_is_zero(int j, int k) const {
  for (int a = 0; a < counts_.at(j); ++a)
    for (int b = 0; b < counts_.at(k); ++b) {
      const auto& e = entries_[offsets_[j] + a][offsets_[k] + b];
      if (e.kind == IntensityEntry::Kind::complement) return false;
      if (e.kind == IntensityEntry::Kind::function && !e.function.is_zero())
        return false;
    }
  return true;
}

bool AggregateModel::is_absorbing(int j) const {
  for (int k = 0; k < macrostates(); ++k)
    if (k != j && !block_is_zero(j, k)) return false;
  return true;
}

RowVector AggregateModel::entry_distribution(int k, double t) const {
  if (k == 0 && t == 0.0) return initial_;
  if (counts_.at(k) == 1) return RowVector::Ones(1);
  if (!reset_) throw MisuseError("entry distribution needs a reset structure");
  if (reset_->pi.at(k).empty()) {
    std::ostringstream os;
    os << "no reset distribution for macrostate " << k + 1;
    throw DomainError(os.str());
  }
  return reset_->pi_at(k, t);
}

ValidationReport validate(const AggregateModel& model,
                          std::span<const double> sample_times) {
  ValidationReport rep;
  using K = Violation::Kind;
  auto add = [&](K kind, double t, int r, int c, double v, const std::string& what) {
    std::ostringstream os;
    os << what;
    if (r >= 0) os << " at row " << r + 1;
    if (c >= 0) os << ", column " << c + 1;
    if (!std::isnan(t)) os << ", t=" << t;
    os << " (value " << v << ")";
    rep.violations.push_back({kind, t, r, c, v, os.str()});
  };
  const double nan = std::nan("");
  const RowVector& init = model.initial();
  for (Eigen::Index a = 0; a < init.size(); ++a)
    if (!(init[a] >= 0.0))
      add(K::initial_negative, nan, -1, static_cast<int>(a), init[a],
          "initial distribution has a negative entry");
  if (std::abs(init.sum() - 1.0) > kInitialSumTolerance)
    add(K::initial_sum, nan, -1, -1, init.sum(), "initial distribution does not sum to 1");

  const int n = model.dimension();
  for (double t : sample_times) {
    const Matrix m = model.intensity(t);
    for (int r = 0; r < n; ++r) {
      double sum = 0.0;
      bool finite = true;
      for (int c = 0; c < n; ++c) {
        if (!std::isfinite(m(r, c))) {
          add(K::non_finite, t, r, c, m(r, c), "non-finite intensity");
          finite = false;
          continue;
        }
        sum += m(r, c);
        if (r != c && m(r, c) < 0.0)
          add(K::negative_off_diagonal, t, r, c, m(r, c), "negative off-diagonal intensity");
      }
      if (finite && std::abs(sum) > kRowSumTolerance)
        add(K::row_sum, t, r, -1, sum, "intensity row does not sum to zero");
    }
    if (!model.has_reset()) continue;
    const auto& rs = model.reset();
    const int J = model.macrostates();
    for (int k = 0; k < J; ++k) {
      if (rs.pi[k].empty()) continue;
      const RowVector p = rs.pi_at(k, t);
      if (std::abs(p.sum() - 1.0) > kResetTolerance)
        add(K::reset_pi_sum, t, model.offset(k), -1, p.sum(),
            "reset distribution pi does not sum to 1");
    }
    for (int j = 0; j < J; ++j)
      for (int k = 0; k < J; ++k) {
        if (j == k) continue;
        const Matrix blk = m.block(model.offset(j), model.offset(k),
                                   model.micro_count(j), model.micro_count(k));
        Matrix expect = Matrix::Zero(blk.rows(), blk.cols());
        if (!rs.beta[j][k].empty()) {
          const Vector b = rs.beta_at(j, k, t);
          for (Eigen::Index a = 0; a < b.size(); ++a)
            if (b[a] < 0.0)
              add(K::reset_negative_beta, t, model.offset(j) + static_cast<int>(a),
                  model.offset(k), b[a], "negative reset rate beta");
          if (!rs.pi[k].empty()) expect = b * rs.pi_at(k, t);
        }
        for (Eigen::Index a = 0; a < blk.rows(); ++a)
          for (Eigen::Index c = 0; c < blk.cols(); ++c)
            if (std::abs(blk(a, c) - expect(a, c)) > kResetTolerance)
              add(K::reset_reconstruction, t, model.offset(j) + static_cast<int>(a),
                  model.offset(k) + static_cast<int>(c), blk(a, c) - expect(a, c),
                  "jump block differs from beta pi");
      }
  }
  return rep;
}

Vector exit_rate(const AggregateModel& model, int j, double t) {
  const Matrix m = model.intensity(t);
  const int off = model.offset(j);
  const int d = model.micro_count(j);
  const Vector out = -m.block(off, off, d, d).rowwise().sum();
  Vector jumps = Vector::Zero(d);
  for (int k = 0; k < model.macrostates(); ++k)
    if (k != j)
      jumps += m.block(off, model.offset(k), d, model.micro_count(k)).rowwise().sum();
  for (int a = 0; a < d; ++a)
    if (std::abs(out[a] - jumps[a]) > kRowSumTolerance) {
      std::ostringstream os;
      os << "exit rate of macrostate " << j + 1 << " microstate " << a + 1
         << " is " << out[a] << " but jump rates sum to " << jumps[a]
         << " at t=" << t;
      throw InconsistentModel(os.str());
    }
  return out;
}

RowVector spell_distribution(const AggregateModel& model, int j, double t,
                             double u, const TimeGrid& grid) {
  if (u < 0.0 || u > t + 1e-12) throw DomainError("duration must satisfy 0 <= u <= t");
  const double start = std::max(0.0, t - u);
  RowVector a = model.entry_distribution(j, start);
  if (u > 0.0) {
    const auto bps = model.breakpoints();
    const TimeGrid local = span_grid(grid, start, t, bps);
    a = a * product_integral(model.diagonal_block_function(j), start, t, local);
  }
  const double mass = a.sum();
  if (!(mass >= kConditioningFloor)) {
    std::ostringstream os;
    os << "probability of staying in macrostate " << j + 1 << " over ["
       << start << ", " << t << "] is " << mass;
    throw ConditioningOnNull(os.str());
  }
  return a / mass;
}

double semi_markov_rate(const AggregateModel& model, int j, int k, double t,
                        double u, const TimeGrid& grid) {
  if (!model.has_reset()) throw MisuseError("semi-Markov rates need a reset model");
  if (j == k) throw DomainError("semi-Markov rate needs j != k");
  const auto& rs = model.reset();
  if (rs.beta.at(j).at(k).empty()) return 0.0;
  const RowVector g = spell_distribution(model, j, t, u, grid);
  return g.dot(rs.beta_at(j, k, t));
}

}  // namespace aggmark
