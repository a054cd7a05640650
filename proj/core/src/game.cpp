#include "gnelin/game.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "gnelin/error.hpp"

namespace gnelin {

namespace {

constexpr double kRankRelTol = 1e-10;
constexpr double kMonotoneTol = 1e-12;

nlohmann::json matrix_to_json(const MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      row[static_cast<std::size_t>(c)] = M(r, c);
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vector_to_json(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

MatrixXd matrix_from_json(const nlohmann::json& rows, Eigen::Index n_rows,
                          Eigen::Index n_cols, const char* what) {
  require(rows.is_array() && static_cast<Eigen::Index>(rows.size()) == n_rows,
          Errc::InvalidConfig, std::string(what) + ": wrong row count");
  MatrixXd M(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
    require(static_cast<Eigen::Index>(row.size()) == n_cols, Errc::InvalidConfig,
            std::string(what) + ": wrong column count");
    for (Eigen::Index c = 0; c < n_cols; ++c)
      M(r, c) = row[static_cast<std::size_t>(c)];
  }
  return M;
}

VectorXd vector_from_json(const nlohmann::json& v, Eigen::Index size,
                          const char* what) {
  const auto values = v.get<std::vector<double>>();
  require(static_cast<Eigen::Index>(values.size()) == size, Errc::InvalidConfig,
          std::string(what) + ": wrong length");
  return Eigen::Map<const VectorXd>(values.data(), size);
}

double smallest_singular_ratio(const MatrixXd& A) {
  Eigen::JacobiSVD<MatrixXd> svd(A);
  const VectorXd& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

}  // namespace

Dims Dims::make(std::vector<int> block_sizes, int m) {
  require(!block_sizes.empty(), Errc::InvalidGame, "need at least one player");
  require(m >= 1, Errc::InvalidGame, "need at least one coupled row");
  Dims d;
  d.players = static_cast<int>(block_sizes.size());
  d.m = m;
  d.offsets.reserve(block_sizes.size());
  for (int s : block_sizes) {
    require(s >= 1, Errc::InvalidGame, "block sizes must be positive");
    d.offsets.push_back(d.n);
    d.n += s;
  }
  d.block_sizes = std::move(block_sizes);
  return d;
}

Dims Dims::uniform(int players, int block_size, int m) {
  require(players >= 1, Errc::InvalidGame, "need at least one player");
  return make(std::vector<int>(static_cast<std::size_t>(players), block_size), m);
}

bool operator==(const Dims& a, const Dims& b) {
  return a.m == b.m && a.block_sizes == b.block_sizes;
}

VectorXd min_norm_solution(const MatrixXd& A_i, const VectorXd& b_i) {
  require(A_i.rows() == b_i.size(), Errc::DimensionMismatch,
          "A_i and b_i disagree on the row count");
  require(A_i.rows() <= A_i.cols() && smallest_singular_ratio(A_i) > kRankRelTol,
          Errc::SingularBlock, "A_i does not have full row rank");
  const MatrixXd gram = A_i * A_i.transpose();
  Eigen::LLT<MatrixXd> llt(gram);
  require(llt.info() == Eigen::Success, Errc::SingularBlock,
          "A_i A_i^T is numerically singular");
  return A_i.transpose() * llt.solve(b_i);
}

CoupledConstraint make_constraint(const Dims& dims,
                                  std::vector<MatrixXd> A_blocks,
                                  std::vector<VectorXd> b_blocks) {
  require(static_cast<int>(A_blocks.size()) == dims.players &&
              static_cast<int>(b_blocks.size()) == dims.players,
          Errc::DimensionMismatch, "one A_i and one b_i per player required");
  CoupledConstraint out;
  out.A = MatrixXd::Zero(dims.m, dims.n);
  out.b = VectorXd::Zero(dims.m);
  out.feasible_point = VectorXd::Zero(dims.n);
  for (int i = 0; i < dims.players; ++i) {
    const auto& Ai = A_blocks[static_cast<std::size_t>(i)];
    const auto& bi = b_blocks[static_cast<std::size_t>(i)];
    require(Ai.rows() == dims.m && Ai.cols() == dims.size(i),
            Errc::DimensionMismatch,
            "A_" + std::to_string(i) + " has the wrong shape");
    require(bi.size() == dims.m, Errc::DimensionMismatch,
            "b_" + std::to_string(i) + " has the wrong length");
    out.A.middleCols(dims.offset(i), dims.size(i)) = Ai;
    out.b += bi;
    out.feasible_point.segment(dims.offset(i), dims.size(i)) =
        min_norm_solution(Ai, bi);
  }
  out.A_blocks = std::move(A_blocks);
  out.b_blocks = std::move(b_blocks);
  return out;
}

VectorXd constraint_residual(const CoupledConstraint& constraint,
                             const VectorXd& x) {
  require(x.size() == constraint.A.cols(), Errc::DimensionMismatch,
          "profile length does not match the constraint");
  return constraint.A * x - constraint.b;
}

VectorXd select_own(const Dims& dims, int i, const VectorXd& copy) {
  require(copy.size() == dims.n, Errc::DimensionMismatch,
          "copy must have length n");
  return copy.segment(dims.offset(i), dims.size(i));
}

VectorXd select_others(const Dims& dims, int i, const VectorXd& copy) {
  require(copy.size() == dims.n, Errc::DimensionMismatch,
          "copy must have length n");
  const int before = dims.offset(i);
  const int after = dims.n - before - dims.size(i);
  VectorXd out(dims.n - dims.size(i));
  out.head(before) = copy.head(before);
  out.tail(after) = copy.tail(after);
  return out;
}

VectorXd merge_blocks(const Dims& dims, int i, const VectorXd& own,
                      const VectorXd& others) {
  require(own.size() == dims.size(i) && others.size() == dims.n - dims.size(i),
          Errc::DimensionMismatch, "block lengths do not match dims");
  const int before = dims.offset(i);
  const int after = dims.n - before - dims.size(i);
  VectorXd out(dims.n);
  out.head(before) = others.head(before);
  out.segment(before, dims.size(i)) = own;
  out.tail(after) = others.tail(after);
  return out;
}

ExtendedProfile ExtendedProfile::zeros(const Dims& dims) {
  return {MatrixXd::Zero(dims.n, dims.players)};
}

ExtendedProfile ExtendedProfile::consensus(const Dims& dims, const VectorXd& x) {
  require(x.size() == dims.n, Errc::DimensionMismatch,
          "profile must have length n");
  return {x.replicate(1, dims.players)};
}

VectorXd ExtendedProfile::decisions(const Dims& dims) const {
  require(copies.rows() == dims.n && copies.cols() == dims.players,
          Errc::DimensionMismatch, "profile does not match dims");
  VectorXd x(dims.n);
  for (int i = 0; i < dims.players; ++i)
    x.segment(dims.offset(i), dims.size(i)) =
        copies.col(i).segment(dims.offset(i), dims.size(i));
  return x;
}

VectorXd ExtendedProfile::stacked() const {
  return Eigen::Map<const VectorXd>(copies.data(), copies.size());
}

Game::Game(Dims dims, CoupledConstraint constraint)
    : dims_(std::move(dims)), constraint_(std::move(constraint)) {
  require(constraint_.A.rows() == dims_.m && constraint_.A.cols() == dims_.n,
          Errc::DimensionMismatch, "constraint does not match dims");
}

void Game::check_profile(const VectorXd& x) const {
  require(x.size() == dims_.n, Errc::DimensionMismatch,
          "profile has length " + std::to_string(x.size()) + ", expected " +
              std::to_string(dims_.n));
}

VectorXd Game::pseudo_gradient(const VectorXd& x) const {
  check_profile(x);
  VectorXd g(dims_.n);
  for (int i = 0; i < dims_.players; ++i)
    g.segment(dims_.offset(i), dims_.size(i)) = partial_gradient(i, x);
  return g;
}

VectorXd Game::extended_pseudo_gradient(const ExtendedProfile& profile) const {
  require(profile.copies.rows() == dims_.n &&
              profile.copies.cols() == dims_.players,
          Errc::DimensionMismatch, "extended profile does not match dims");
  VectorXd g(dims_.n);
  for (int i = 0; i < dims_.players; ++i)
    g.segment(dims_.offset(i), dims_.size(i)) =
        partial_gradient(i, profile.copies.col(i));
  return g;
}

AffineGame::AffineGame(Dims dims, MatrixXd M, VectorXd c,
                       CoupledConstraint constraint)
    : Game(std::move(dims), std::move(constraint)),
      M_(std::move(M)),
      c_(std::move(c)) {
  require(M_.rows() == dims_.n && M_.cols() == dims_.n && c_.size() == dims_.n,
          Errc::DimensionMismatch, "M must be n x n and c length n");
  require(M_.allFinite() && c_.allFinite(), Errc::InvalidGame,
          "M and c must be finite");
}

VectorXd AffineGame::partial_gradient(int i, const VectorXd& profile) const {
  check_profile(profile);
  return M_.middleRows(dims_.offset(i), dims_.size(i)) * profile +
         c_.segment(dims_.offset(i), dims_.size(i));
}

VectorXd AffineGame::pseudo_gradient(const VectorXd& x) const {
  check_profile(x);
  return M_ * x + c_;
}

nlohmann::json AffineGame::to_json() const {
  nlohmann::json doc = constraint_to_json(constraint_);
  doc["type"] = "affine";
  doc["block_sizes"] = dims_.block_sizes;
  doc["m"] = dims_.m;
  doc["M"] = matrix_to_json(M_);
  doc["c"] = vector_to_json(c_);
  return doc;
}

CournotGame::CournotGame(Dims dims, std::vector<VectorXd> Q_diag,
                         std::vector<VectorXd> q, VectorXd price_intercept,
                         VectorXd price_slope, CoupledConstraint constraint)
    : Game(std::move(dims), std::move(constraint)),
      Q_diag_(std::move(Q_diag)),
      q_(std::move(q)),
      price_intercept_(std::move(price_intercept)),
      price_slope_(std::move(price_slope)) {
  require(static_cast<int>(Q_diag_.size()) == dims_.players &&
              static_cast<int>(q_.size()) == dims_.players,
          Errc::DimensionMismatch, "one Q_i and one q_i per player required");
  for (int i = 0; i < dims_.players; ++i) {
    const auto& Qi = Q_diag_[static_cast<std::size_t>(i)];
    require(Qi.size() == dims_.size(i) &&
                q_[static_cast<std::size_t>(i)].size() == dims_.size(i),
            Errc::DimensionMismatch, "Q_i / q_i length mismatch");
    require(Qi.minCoeff() > 0.0, Errc::InvalidGame,
            "Q_i must have positive diagonal");
  }
  require(price_intercept_.size() == dims_.m && price_slope_.size() == dims_.m,
          Errc::DimensionMismatch, "price vectors must have length m");
  require(price_intercept_.minCoeff() > 0.0, Errc::InvalidGame,
          "price intercepts must be positive");
  require(price_slope_.minCoeff() >= 0.0, Errc::InvalidGame,
          "price slopes must be nonnegative");
}

double CournotGame::cost(int i, const VectorXd& profile) const {
  check_profile(profile);
  const VectorXd xi = profile.segment(dims_.offset(i), dims_.size(i));
  const auto& Qi = Q_diag_[static_cast<std::size_t>(i)];
  const auto& Ai = constraint_.A_blocks[static_cast<std::size_t>(i)];
  const VectorXd price =
      price_intercept_ - price_slope_.cwiseProduct(constraint_.A * profile);
  return xi.dot(Qi.cwiseProduct(xi)) + q_[static_cast<std::size_t>(i)].dot(xi) -
         price.dot(Ai * xi);
}

VectorXd CournotGame::partial_gradient(int i, const VectorXd& profile) const {
  check_profile(profile);
  const VectorXd xi = profile.segment(dims_.offset(i), dims_.size(i));
  const auto& Qi = Q_diag_[static_cast<std::size_t>(i)];
  const auto& Ai = constraint_.A_blocks[static_cast<std::size_t>(i)];
  const VectorXd price =
      price_intercept_ - price_slope_.cwiseProduct(constraint_.A * profile);
  return 2.0 * Qi.cwiseProduct(xi) + q_[static_cast<std::size_t>(i)] -
         Ai.transpose() * price +
         Ai.transpose() * price_slope_.cwiseProduct(Ai * xi);
}

nlohmann::json CournotGame::to_json() const {
  nlohmann::json doc = constraint_to_json(constraint_);
  doc["type"] = "cournot";
  doc["block_sizes"] = dims_.block_sizes;
  doc["m"] = dims_.m;
  nlohmann::json Q = nlohmann::json::array();
  nlohmann::json q = nlohmann::json::array();
  for (int i = 0; i < dims_.players; ++i) {
    Q.push_back(vector_to_json(Q_diag_[static_cast<std::size_t>(i)]));
    q.push_back(vector_to_json(q_[static_cast<std::size_t>(i)]));
  }
  doc["Q_diag"] = Q;
  doc["q"] = q;
  doc["price_intercept"] = vector_to_json(price_intercept_);
  doc["price_slope"] = vector_to_json(price_slope_);
  return doc;
}

AffineGame affine_from_cournot(const CournotGame& game) {
  const Dims& d = game.dims();
  const auto& blocks = game.constraint().A_blocks;
  const auto S = game.price_slope().asDiagonal();
  MatrixXd M(d.n, d.n);
  VectorXd c(d.n);
  for (int i = 0; i < d.players; ++i) {
    const auto& Ai = blocks[static_cast<std::size_t>(i)];
    for (int j = 0; j < d.players; ++j) {
      const auto& Aj = blocks[static_cast<std::size_t>(j)];
      MatrixXd block = Ai.transpose() * S * Aj;
      if (i == j) {
        block *= 2.0;
        block.diagonal() += 2.0 * game.Q_diag()[static_cast<std::size_t>(i)];
      }
      M.block(d.offset(i), d.offset(j), d.size(i), d.size(j)) = block;
    }
    c.segment(d.offset(i), d.size(i)) =
        game.q()[static_cast<std::size_t>(i)] -
        Ai.transpose() * game.price_intercept();
  }
  return AffineGame(d, std::move(M), std::move(c), game.constraint());
}

MonotonicityConstants monotonicity_constants(const AffineGame& game) {
  const MatrixXd& M = game.M();
  const MatrixXd sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  MonotonicityConstants out;
  out.mu = es.eigenvalues().minCoeff();
  require(out.mu > kMonotoneTol, Errc::NotStronglyMonotone,
          "symmetric part of M has lambda_min = " + std::to_string(out.mu));
  const Dims& d = game.dims();
  for (int i = 0; i < d.players; ++i) {
    const MatrixXd rows = M.middleRows(d.offset(i), d.size(i));
    Eigen::JacobiSVD<MatrixXd> svd(rows);
    out.L = std::max(out.L, svd.singularValues()(0));
  }
  Eigen::JacobiSVD<MatrixXd> full(M);
  out.L_full = full.singularValues()(0);
  return out;
}

AffineGame scalar_quadratic_game(const VectorXd& targets,
                                 const VectorXd& b_blocks) {
  require(targets.size() == b_blocks.size() && targets.size() >= 1,
          Errc::DimensionMismatch, "one target and one b_i per player");
  const int N = static_cast<int>(targets.size());
  Dims d = Dims::uniform(N, 1, 1);
  std::vector<MatrixXd> A(static_cast<std::size_t>(N), MatrixXd::Ones(1, 1));
  std::vector<VectorXd> b;
  for (int i = 0; i < N; ++i) b.push_back(VectorXd::Constant(1, b_blocks(i)));
  CoupledConstraint con = make_constraint(d, std::move(A), std::move(b));
  return AffineGame(d, 2.0 * MatrixXd::Identity(N, N), -2.0 * targets,
                    std::move(con));
}

AffineGame random_affine_game(const RandomAffineSpec& spec, Rng& rng) {
  require(spec.players >= 1 && spec.m >= 1, Errc::InvalidConfig,
          "random game needs players >= 1 and m >= 1");
  const int hi = std::max(spec.m, spec.max_block);
  std::vector<int> sizes;
  for (int i = 0; i < spec.players; ++i)
    sizes.push_back(spec.m + static_cast<int>(rng.below(
                                 static_cast<std::uint64_t>(hi - spec.m + 1))));
  Dims d = Dims::make(sizes, spec.m);

  std::vector<MatrixXd> A;
  std::vector<VectorXd> b;
  for (int i = 0; i < d.players; ++i) {
    MatrixXd Ai(d.m, d.size(i));
    do {
      for (Eigen::Index r = 0; r < Ai.rows(); ++r)
        for (Eigen::Index c = 0; c < Ai.cols(); ++c) Ai(r, c) = rng.uniform(-1, 1);
    } while (smallest_singular_ratio(Ai) < 0.1);
    VectorXd bi(d.m);
    for (int r = 0; r < d.m; ++r) bi(r) = rng.uniform(-0.5, 0.5);
    A.push_back(std::move(Ai));
    b.push_back(std::move(bi));
  }
  CoupledConstraint con = make_constraint(d, std::move(A), std::move(b));

  MatrixXd G(d.n, d.n);
  MatrixXd K(d.n, d.n);
  for (int r = 0; r < d.n; ++r)
    for (int c = 0; c < d.n; ++c) {
      G(r, c) = rng.uniform(-1, 1);
      K(r, c) = rng.uniform(-1, 1);
    }
  MatrixXd M = spec.coupling * (G * G.transpose()) / d.n +
               spec.coupling * (K - K.transpose()) +
               MatrixXd::Identity(d.n, d.n);
  VectorXd c(d.n);
  for (int r = 0; r < d.n; ++r) c(r) = rng.uniform(-2, 2);
  return AffineGame(d, std::move(M), std::move(c), std::move(con));
}

nlohmann::json constraint_to_json(const CoupledConstraint& constraint) {
  nlohmann::json A = nlohmann::json::array();
  nlohmann::json b = nlohmann::json::array();
  for (std::size_t i = 0; i < constraint.A_blocks.size(); ++i) {
    A.push_back(matrix_to_json(constraint.A_blocks[i]));
    b.push_back(vector_to_json(constraint.b_blocks[i]));
  }
  return {{"A_blocks", A}, {"b_blocks", b}};
}

std::unique_ptr<Game> game_from_json(const nlohmann::json& doc) {
  for (const char* key : {"type", "block_sizes", "m", "A_blocks", "b_blocks"})
    require(doc.contains(key), Errc::InvalidConfig,
            std::string("game document is missing \"") + key + "\"");
  Dims d = Dims::make(doc.at("block_sizes").get<std::vector<int>>(),
                      doc.at("m").get<int>());
  const auto& Aj = doc.at("A_blocks");
  const auto& bj = doc.at("b_blocks");
  require(static_cast<int>(Aj.size()) == d.players &&
              static_cast<int>(bj.size()) == d.players,
          Errc::InvalidConfig, "need one constraint block per player");
  std::vector<MatrixXd> A;
  std::vector<VectorXd> b;
  for (int i = 0; i < d.players; ++i) {
    A.push_back(matrix_from_json(Aj[static_cast<std::size_t>(i)], d.m, d.size(i),
                                 "A_blocks"));
    b.push_back(vector_from_json(bj[static_cast<std::size_t>(i)], d.m, "b_blocks"));
  }
  CoupledConstraint con = make_constraint(d, std::move(A), std::move(b));

  const auto type = doc.at("type").get<std::string>();
  if (type == "affine") {
    MatrixXd M = matrix_from_json(doc.at("M"), d.n, d.n, "M");
    VectorXd c = vector_from_json(doc.at("c"), d.n, "c");
    return std::make_unique<AffineGame>(d, std::move(M), std::move(c),
                                        std::move(con));
  }
  if (type == "cournot") {
    std::vector<VectorXd> Q;
    std::vector<VectorXd> q;
    for (int i = 0; i < d.players; ++i) {
      Q.push_back(vector_from_json(doc.at("Q_diag")[static_cast<std::size_t>(i)],
                                   d.size(i), "Q_diag"));
      q.push_back(vector_from_json(doc.at("q")[static_cast<std::size_t>(i)],
                                   d.size(i), "q"));
    }
    return std::make_unique<CournotGame>(
        d, std::move(Q), std::move(q),
        vector_from_json(doc.at("price_intercept"), d.m, "price_intercept"),
        vector_from_json(doc.at("price_slope"), d.m, "price_slope"),
        std::move(con));
  }
  fail(Errc::InvalidConfig, "unknown game type \"" + type + "\"");
}

}  // namespace gnelin
