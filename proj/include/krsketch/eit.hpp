#pragma once

// Linearized EIT on the unit square with bilinear (Q1) finite elements.
//
// Mesh numbering: node (i, j) at (i h, j h) has index j * (nx + 1) + i; cell
// (i, j) covers [i h, (i + 1) h] x [j h, (j + 1) h] and has index j * nx + i.
// Boundary nodes run counterclockwise from (0, 0).

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "krsketch/lsq.hpp"
#include "krsketch/sketch.hpp"
#include "krsketch/synthbench.hpp"
#include "krsketch/tensor.hpp"

namespace krs {

struct Mesh2D {
  Index nx = 0;
  double h = 0.0;
  std::vector<Index> boundary;  // 4 nx node indices, counterclockwise

  Index nodes_per_side() const { return nx + 1; }
  Index num_nodes() const { return (nx + 1) * (nx + 1); }
  Index num_cells() const { return nx * nx; }
  Index node(Index i, Index j) const { return j * (nx + 1) + i; }
  Index cell(Index i, Index j) const { return j * nx + i; }
  double x(Index node) const { return static_cast<double>(node % (nx + 1)) * h; }
  double y(Index node) const { return static_cast<double>(node / (nx + 1)) * h; }
  bool on_boundary(Index node) const;
  // Counterclockwise arc length of a boundary node from (0, 0), in [0, 4).
  double perimeter_position(Index node) const;
};

Mesh2D build_mesh(Index nx);

// Element stiffness for unit conductivity on a square cell, local order
// (0,0), (1,0), (1,1), (0,1).
Eigen::Matrix4d q1_element_stiffness();

// Nodal solution of div(sigma_star grad rho) = 0 with rho = boundary_values
// on the boundary (one value per entry of mesh.boundary).
DenseVector solve_background(const Mesh2D& mesh, double sigma_star, const DenseVector& boundary_values);

// One nodal solution per column of boundary_data (num boundary x sources).
DenseMatrix forward_bank(const Mesh2D& mesh, double sigma_star, const DenseMatrix& boundary_data);

// Discrete Dirac deltas: value `scale` at the given boundary positions
// (indices into mesh.boundary), 0 elsewhere.
DenseMatrix delta_sources(const Mesh2D& mesh, const std::vector<Index>& boundary_positions,
                          double scale = 1.0);
DenseMatrix forward_bank(const Mesh2D& mesh, double sigma_star, const std::vector<Index>& boundary_positions);

// count equispaced boundary hats of half-width h along the perimeter,
// starting at (0, 0). Lets the source count differ from 4 nx.
DenseMatrix perimeter_hat_sources(const Mesh2D& mesh, Index count);

enum class Quadrature { OnePoint, FourPoint };
std::string_view quadrature_name(Quadrature q);
Quadrature parse_quadrature(std::string_view name);

// Row (i1, i2), column k approximates the integral over cell k of
// grad rho^(i1) . grad rho^(i2). OnePoint gives L = 2 terms, FourPoint L = 8.
KhatriRaoOperator assemble_system(const Mesh2D& mesh, const DenseMatrix& bank, Quadrature q);

struct Inclusion {
  double x0 = 0.0;  // lower-left corner
  double y0 = 0.0;
  double side = 0.2;
  double amplitude = 1.0;
};

// Squares of side 0.2 at the top-left and bottom-right, inset 0.1 from the
// boundary.
std::vector<Inclusion> default_inclusions();

// Cellwise field: amplitude on cells whose centre lies in a square.
DenseVector inclusion_field(const Mesh2D& mesh, const std::vector<Inclusion>& inclusions);

struct SourceSpec {
  // 0: one delta per boundary node; otherwise that many perimeter hats.
  Index hat_count = 0;
  bool exclude_corners = false;
  double delta_scale = 1.0;
};

struct EitConfig {
  Index nx = 20;
  double sigma_star = 10.0;
  std::vector<Inclusion> inclusions = default_inclusions();
  double noise_sd = 1e-8;
  std::uint64_t seed = 0;
  Quadrature quadrature = Quadrature::OnePoint;
  SourceSpec sources;
};

struct EitSystem {
  Mesh2D mesh;
  double sigma_star = 0.0;
  DenseMatrix bank;
  KhatriRaoOperator op;
  DenseVector sigma_true;
  DenseVector data;
  double noise_sd = 0.0;
};

EitSystem make_eit_problem(const EitConfig& cfg);

struct Reconstruction {
  DenseVector sigma_hat;
  SweepRecord record;
};

Reconstruction reconstruct_with_sketch(const EitSystem& sys, const Baseline& base, const Sketch& s,
                                       double rcond = kDefaultRcond);
Reconstruction reconstruct(const EitSystem& sys, const Baseline& base, Strategy strategy,
                           const SketchSize& size, std::uint64_t seed, double rcond = kDefaultRcond);

struct EitSweepConfig {
  EitConfig problem;
  std::vector<Strategy> strategies{Strategy::Case1, Strategy::Case2, Strategy::DenseGaussian};
  std::vector<Index> r_grid{26 * 26, 38 * 38, 50 * 50, 62 * 62, 74 * 74};
  Index trials = 10;
  std::uint64_t seed = 0;
  double rcond = kDefaultRcond;
  unsigned jobs = 0;
  bool timing = false;
  std::function<void(const std::string&)> log;
};

struct EitSweepResult {
  std::vector<SweepRecord> records;  // ordered by (strategy, r, trial)
  DenseVector sigma_true;
  // Trial-0 reconstruction at the last r for each strategy, in strategy order.
  std::vector<DenseVector> final_reconstructions;
  Baseline baseline;
  Index nx = 0;
};

EitSweepResult eit_sweep(const EitSweepConfig& cfg);

}  // namespace krs
