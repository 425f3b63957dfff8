#include "entsep/reduction.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "entsep/error.hpp"

namespace entsep {
namespace {

constexpr char kMagic[4] = {'P', 'R', 'J', '1'};
constexpr std::size_t kBlockRows = 1024;

Eigen::MatrixXd RowsAsDouble(const EmbeddingMatrix& x, std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), static_cast<Eigen::Index>(x.dim()));
  for (std::size_t i = begin; i < end; ++i) {
    auto v = x.row(i);
    for (std::size_t d = 0; d < v.size(); ++d)
      out(static_cast<Eigen::Index>(i - begin), static_cast<Eigen::Index>(d)) = v[d];
  }
  return out;
}

void WriteDoubles(std::ofstream& out, const double* data, std::size_t n) {
  static_assert(std::endian::native == std::endian::little,
                "projection files are written on little-endian hosts only");
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

Projection FitLda(const EmbeddingMatrix& x, std::span<const EntityId> labels,
                  std::size_t target_dim) {
  if (labels.size() != x.rows())
    throw DataError(fmt::format("{} labels for {} rows", labels.size(), x.rows()));
  if (target_dim == 0) throw UsageError("target dim must be >= 1");

  std::map<EntityId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  if (groups.size() < 2) throw DataError("LDA needs at least 2 classes");
  for (const auto& [label, rows] : groups)
    if (rows.size() < 2)
      throw DataError(fmt::format("LDA class \"{}\" has fewer than 2 rows", label));

  const auto dim = static_cast<Eigen::Index>(x.dim());
  const auto n_classes = static_cast<Eigen::Index>(groups.size());

  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n_classes, dim);
  Eigen::VectorXd counts(n_classes);
  std::vector<Eigen::Index> class_of(x.rows());
  Eigen::Index k = 0;
  for (const auto& [label, rows] : groups) {
    for (std::size_t r : rows) {
      class_of[r] = k;
      auto v = x.row(r);
      for (Eigen::Index d = 0; d < dim; ++d) means(k, d) += v[static_cast<std::size_t>(d)];
    }
    counts[k] = static_cast<double>(rows.size());
    means.row(k) /= counts[k];
    ++k;
  }
  Eigen::VectorXd overall = (means.transpose() * counts) / counts.sum();

  // Within-class scatter, accumulated block by block in row order.
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t begin = 0; begin < x.rows(); begin += kBlockRows) {
    std::size_t end = std::min(x.rows(), begin + kBlockRows);
    Eigen::MatrixXd block = RowsAsDouble(x, begin, end);
    for (std::size_t i = begin; i < end; ++i)
      block.row(static_cast<Eigen::Index>(i - begin)) -= means.row(class_of[i]);
    within.noalias() += block.transpose() * block;
  }
  within = 0.5 * (within + within.transpose());

  Eigen::MatrixXd centered_means = means.rowwise() - overall.transpose();
  Eigen::MatrixXd between =
      centered_means.transpose() * counts.asDiagonal() * centered_means;
  between = 0.5 * (between + between.transpose());

  const double shrinkage = 1e-4 * within.trace() / static_cast<double>(dim);
  Eigen::MatrixXd regularized = within;
  regularized.diagonal().array() += shrinkage;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      between, regularized, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw NumericError("LDA eigensolve failed (within-class scatter not positive definite)");

  const auto out_dim = static_cast<Eigen::Index>(
      std::min<std::size_t>({target_dim, groups.size() - 1, x.dim()}));
  Projection p;
  p.shrinkage = shrinkage;
  p.mean = overall;
  p.matrix.resize(dim, out_dim);
  p.eigenvalues.resize(out_dim);
  for (Eigen::Index j = 0; j < out_dim; ++j) {
    Eigen::Index src = dim - 1 - j;  // ascending order from the solver
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    p.matrix.col(j) = v;
    p.eigenvalues[j] = std::max(0.0, solver.eigenvalues()[src]);
  }
  if (!p.matrix.allFinite()) throw NumericError("LDA produced non-finite directions");
  return p;
}

Projection FitLda(const EmbeddingMatrix& x, const Corpus& c, std::size_t target_dim) {
  std::vector<EntityId> labels;
  labels.reserve(c.size());
  for (const Instance& inst : c.instances()) labels.push_back(inst.entity);
  return FitLda(x, labels, target_dim);
}

Eigen::MatrixXd TransformRows(const Projection& p, const Eigen::MatrixXd& rows) {
  if (static_cast<std::size_t>(rows.cols()) != p.input_dim())
    throw DataError(fmt::format("input dim {} does not match projection input dim {}",
                                rows.cols(), p.input_dim()));
  return (rows.rowwise() - p.mean.transpose()) * p.matrix;
}

EmbeddingMatrix Transform(const Projection& p, const EmbeddingMatrix& x) {
  if (x.dim() != p.input_dim())
    throw DataError(fmt::format("embedding dim {} does not match projection input dim {}",
                                x.dim(), p.input_dim()));
  const std::size_t out_dim = p.out_dim();
  std::vector<float> values(x.rows() * out_dim);
  for (std::size_t begin = 0; begin < x.rows(); begin += kBlockRows) {
    std::size_t end = std::min(x.rows(), begin + kBlockRows);
    Eigen::MatrixXd projected = TransformRows(p, RowsAsDouble(x, begin, end));
    for (Eigen::Index i = 0; i < projected.rows(); ++i)
      for (Eigen::Index j = 0; j < projected.cols(); ++j)
        values[(begin + static_cast<std::size_t>(i)) * out_dim + static_cast<std::size_t>(j)] =
            static_cast<float>(projected(i, j));
  }
  EmbeddingManifest m = x.manifest();
  m.dim = out_dim;
  m.reduction = ReductionInfo{"lda", x.dim(), p.shrinkage};
  return EmbeddingMatrix(std::move(m), x.rows(), std::move(values));
}

void SaveProjection(const Projection& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path));
  nlohmann::ordered_json j;
  j["input_dim"] = p.input_dim();
  j["out_dim"] = p.out_dim();
  j["shrinkage"] = p.shrinkage;
  j["eigenvalues"] = std::vector<double>(p.eigenvalues.data(),
                                         p.eigenvalues.data() + p.eigenvalues.size());
  std::string header = j.dump();
  auto len = static_cast<std::uint32_t>(header.size());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  WriteDoubles(out, p.mean.data(), static_cast<std::size_t>(p.mean.size()));
  WriteDoubles(out, p.matrix.data(), static_cast<std::size_t>(p.matrix.size()));
  if (!out) throw DataError(fmt::format("write failed for '{}'", path));
}

Projection LoadProjection(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open projection file '{}'", path));
  char magic[4];
  std::uint32_t len = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError(fmt::format("'{}' is not a PRJ1 file", path));
  if (!in.read(reinterpret_cast<char*>(&len), 4))
    throw DataError(fmt::format("'{}': truncated header", path));
  std::string header(len, '\0');
  if (!in.read(header.data(), len)) throw DataError(fmt::format("'{}': truncated header", path));
  Projection p;
  std::size_t input_dim = 0, out_dim = 0;
  try {
    auto j = nlohmann::json::parse(header);
    input_dim = j.at("input_dim").get<std::size_t>();
    out_dim = j.at("out_dim").get<std::size_t>();
    p.shrinkage = j.at("shrinkage").get<double>();
    auto ev = j.at("eigenvalues").get<std::vector<double>>();
    if (ev.size() != out_dim) throw DataError("eigenvalue count does not match out_dim");
    p.eigenvalues = Eigen::Map<Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("'{}': bad projection header: {}", path, e.what()));
  }
  p.mean.resize(static_cast<Eigen::Index>(input_dim));
  p.matrix.resize(static_cast<Eigen::Index>(input_dim), static_cast<Eigen::Index>(out_dim));
  if (!in.read(reinterpret_cast<char*>(p.mean.data()),
               static_cast<std::streamsize>(input_dim * sizeof(double))) ||
      !in.read(reinterpret_cast<char*>(p.matrix.data()),
               static_cast<std::streamsize>(input_dim * out_dim * sizeof(double))))
    throw DataError(fmt::format("'{}': truncated payload", path));
  return p;
}

}  // namespace entsep
