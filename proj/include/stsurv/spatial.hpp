#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace stsurv {

/// Largest admissible Leroux mixing parameter inside the sampler. At exactly 1
/// the joint density is improper.
inline constexpr double kRhoMax = 1.0 - 1e-6;

/// Undirected neighbor structure over areas 0..I-1.
class AdjacencyGraph {
public:
    AdjacencyGraph() = default;

    /// Throws ValidationError on self-loops or out-of-range indices. Duplicate
    /// edges are collapsed.
    AdjacencyGraph(int num_areas, std::span<const std::pair<int, int>> edges);

    [[nodiscard]] int size() const noexcept { return static_cast<int>(neighbors_.size()); }
    [[nodiscard]] const std::vector<int>& neighbors(int i) const {
        return neighbors_[static_cast<std::size_t>(i)];
    }
    [[nodiscard]] int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
    /// Each undirected edge once, with first < second.
    [[nodiscard]] const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }
    [[nodiscard]] std::vector<int> isolated_areas() const;
    [[nodiscard]] int num_components() const;

    /// Structure matrix R = diag(n) - W.
    [[nodiscard]] Eigen::MatrixXd structure_matrix() const;

private:
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::pair<int, int>> edges_;
};

/// rows x cols rook-adjacency lattice; area index = r * cols + c.
AdjacencyGraph make_lattice(int rows, int cols);

struct ConditionalMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Sufficient statistics of one field vector v for the Leroux density:
/// sum of squares and sum over edges of squared differences (= v' R v).
struct FieldQuadratics {
    double sum_sq = 0.0;
    double edge_sq = 0.0;
};

/// Leroux CAR field with precision Q = (rho R + (1 - rho) I) / sigma2. The
/// eigen-decomposition of R is computed once so the rho-dependent
/// log-determinant is an O(I) sum.
class LerouxField {
public:
    LerouxField() = default;
    explicit LerouxField(AdjacencyGraph graph);

    [[nodiscard]] const AdjacencyGraph& graph() const noexcept { return graph_; }
    [[nodiscard]] int size() const noexcept { return graph_.size(); }
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

    /// Full conditional of values[i] given the rest; rho in [0, 1].
    [[nodiscard]] ConditionalMoments conditional_moments(std::span<const double> values, int i,
                                                         double rho, double sigma2) const;

    /// log N(v; 0, Q^-1) for rho in [0, 1), sigma2 > 0.
    [[nodiscard]] double log_density(std::span<const double> values, double rho,
                                     double sigma2) const;
    [[nodiscard]] double log_density(const FieldQuadratics& q, double rho, double sigma2) const;

    [[nodiscard]] FieldQuadratics quadratics(std::span<const double> values) const;

    /// sum_i log(rho lambda_i + 1 - rho).
    [[nodiscard]] double log_det_unscaled(double rho) const;

    /// Exact joint draw via the eigen-decomposition of R.
    [[nodiscard]] Eigen::VectorXd sample(double rho, double sigma2, std::mt19937_64& rng) const;

private:
    AdjacencyGraph graph_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
};

} // namespace stsurv
