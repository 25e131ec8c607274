#include "stsurv/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "stsurv/error.hpp"

namespace stsurv {

namespace {

void check_rho_sigma(double rho, double sigma2, bool allow_one) {
    const bool rho_ok = allow_one ? (rho >= 0.0 && rho <= 1.0) : (rho >= 0.0 && rho < 1.0);
    if (!rho_ok) {
        throw ValidationError("Leroux rho out of range: " + std::to_string(rho));
    }
    if (!(sigma2 > 0.0)) {
        throw ValidationError("Leroux variance must be positive");
    }
}

} // namespace

AdjacencyGraph::AdjacencyGraph(int num_areas, std::span<const std::pair<int, int>> edges)
    : neighbors_(static_cast<std::size_t>(num_areas)) {
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= num_areas || b >= num_areas) {
            throw ValidationError("edge references area index out of range");
        }
        if (a == b) {
            throw ValidationError("self-loop on area index " + std::to_string(a));
        }
        neighbors_[static_cast<std::size_t>(a)].push_back(b);
        neighbors_[static_cast<std::size_t>(b)].push_back(a);
    }
    for (auto& list : neighbors_) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    for (int i = 0; i < num_areas; ++i) {
        for (int j : neighbors(i)) {
            if (i < j) {
                edges_.emplace_back(i, j);
            }
        }
    }
}

std::vector<int> AdjacencyGraph::isolated_areas() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if (neighbors(i).empty()) {
            out.push_back(i);
        }
    }
    return out;
}

int AdjacencyGraph::num_components() const {
    std::vector<int> label(static_cast<std::size_t>(size()), -1);
    int count = 0;
    std::vector<int> stack;
    for (int start = 0; start < size(); ++start) {
        if (label[static_cast<std::size_t>(start)] >= 0) {
            continue;
        }
        stack.push_back(start);
        label[static_cast<std::size_t>(start)] = count;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : neighbors(v)) {
                if (label[static_cast<std::size_t>(w)] < 0) {
                    label[static_cast<std::size_t>(w)] = count;
                    stack.push_back(w);
                }
            }
        }
        ++count;
    }
    return count;
}

Eigen::MatrixXd AdjacencyGraph::structure_matrix() const {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(size(), size());
    for (int i = 0; i < size(); ++i) {
        R(i, i) = degree(i);
        for (int j : neighbors(i)) {
            R(i, j) = -1.0;
        }
    }
    return R;
}

AdjacencyGraph make_lattice(int rows, int cols) {
    if (rows < 1 || cols < 1) {
        throw ValidationError("lattice dimensions must be positive");
    }
    std::vector<std::pair<int, int>> edges;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int i = r * cols + c;
            if (c + 1 < cols) {
                edges.emplace_back(i, i + 1);
            }
            if (r + 1 < rows) {
                edges.emplace_back(i, i + cols);
            }
        }
    }
    return AdjacencyGraph(rows * cols, edges);
}

LerouxField::LerouxField(AdjacencyGraph graph) : graph_(std::move(graph)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(graph_.structure_matrix());
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigen-decomposition of the structure matrix failed");
    }
    // R is positive semi-definite; clamp tiny negative round-off.
    eigenvalues_ = solver.eigenvalues().cwiseMax(0.0);
    eigenvectors_ = solver.eigenvectors();
}

ConditionalMoments LerouxField::conditional_moments(std::span<const double> values, int i,
                                                    double rho, double sigma2) const {
    if (i < 0 || i >= size()) {
        throw ValidationError("area index out of range: " + std::to_string(i));
    }
    check_rho_sigma(rho, sigma2, true);
    double neighbor_sum = 0.0;
    for (int j : graph_.neighbors(i)) {
        neighbor_sum += values[static_cast<std::size_t>(j)];
    }
    const double precision_weight = 1.0 - rho + rho * graph_.degree(i);
    return {rho * neighbor_sum / precision_weight, sigma2 / precision_weight};
}

FieldQuadratics LerouxField::quadratics(std::span<const double> values) const {
    FieldQuadratics q;
    for (double v : values) {
        q.sum_sq += v * v;
    }
    for (const auto& [a, b] : graph_.edges()) {
        const double d = values[static_cast<std::size_t>(a)] - values[static_cast<std::size_t>(b)];
        q.edge_sq += d * d;
    }
    return q;
}

double LerouxField::log_det_unscaled(double rho) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
        total += std::log(rho * eigenvalues_[i] + 1.0 - rho);
    }
    return total;
}

double LerouxField::log_density(const FieldQuadratics& q, double rho, double sigma2) const {
    check_rho_sigma(rho, sigma2, false);
    const double n = size();
    const double quad = (rho * q.edge_sq + (1.0 - rho) * q.sum_sq) / sigma2;
    return 0.5 * log_det_unscaled(rho) - 0.5 * n * std::log(sigma2) - 0.5 * quad -
           0.5 * n * std::log(2.0 * std::numbers::pi);
}

double LerouxField::log_density(std::span<const double> values, double rho, double sigma2) const {
    if (static_cast<int>(values.size()) != size()) {
        throw ValidationError("field vector length does not match graph size");
    }
    return log_density(quadratics(values), rho, sigma2);
}

Eigen::VectorXd LerouxField::sample(double rho, double sigma2, std::mt19937_64& rng) const {
    check_rho_sigma(rho, sigma2, false);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double precision = rho * eigenvalues_[i] + 1.0 - rho;
        z[i] = normal(rng) * std::sqrt(sigma2 / precision);
    }
    return eigenvectors_ * z;
}

} // namespace stsurv
