#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entsep/corpus.hpp"
#include "entsep/embeddings.hpp"

namespace entsep {

// Fisher discriminant projection. Columns of `matrix` are the discriminant
// directions, normalized so that V^T (S_W + shrinkage I) V = I.
struct Projection {
  Eigen::MatrixXd matrix;        // input_dim x out_dim
  Eigen::VectorXd mean;          // input_dim
  Eigen::VectorXd eigenvalues;   // out_dim, descending, >= 0
  double shrinkage = 0.0;

  std::size_t input_dim() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(matrix.cols()); }
};

// Solves S_B v = lambda (S_W + gamma I) v with gamma = 1e-4 trace(S_W) / dim.
// out_dim = min(target_dim, classes - 1, input_dim). Each direction's
// largest-magnitude component is made positive.
Projection FitLda(const EmbeddingMatrix& x, std::span<const EntityId> labels,
                  std::size_t target_dim);
Projection FitLda(const EmbeddingMatrix& x, const Corpus& c, std::size_t target_dim);

// Rows mapped to (x - mean) * matrix, stored as float.
EmbeddingMatrix Transform(const Projection& p, const EmbeddingMatrix& x);

// Projected rows in double precision.
Eigen::MatrixXd TransformRows(const Projection& p, const Eigen::MatrixXd& rows);

// File layout: "PRJ1", u32 little-endian header length, JSON header
// (input_dim, out_dim, shrinkage, eigenvalues), then little-endian float64
// mean followed by the matrix in column-major order.
void SaveProjection(const Projection& p, const std::string& path);
Projection LoadProjection(const std::string& path);

}  // namespace entsep
