#pragma once

/**
 * @file homogenize.hpp
 * Periodic cell problems on a perforated unit cell Y = [0,1]^2 and the
 * effective diffusion / tortuosity tensors they produce.
 *
 * The cell is a structured n x n grid. Grain cells are removed from the
 * unknowns, so the grain boundary carries the natural zero-flux condition.
 * For each direction j the corrector w_j solves
 *   div( d (grad w_j + e_j) ) = 0   in the fluid,
 * periodic on the outer faces, with zero mean over the fluid.
 */

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace colloid::homogenize {

inline constexpr int kDim = 2;

enum class GrainShape { IsotropicDisc, AnisotropicEllipse, Custom };

class UnitCellGeometry {
public:
    /// Centered disc or 2:1 ellipse (long axis along y_1) sized to `target_porosity`.
    static UnitCellGeometry make(GrainShape shape, int resolution, double target_porosity);
    /// Arbitrary mask, row-major with index iy * resolution + ix; nonzero = grain.
    static UnitCellGeometry from_mask(int resolution, std::vector<std::uint8_t> mask);

    int resolution() const { return resolution_; }
    double cell_size() const { return 1.0 / resolution_; }
    bool solid(int ix, int iy) const {
        return mask_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(resolution_) +
                     static_cast<std::size_t>(ix)] != 0;
    }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    GrainShape kind() const { return kind_; }
    /// Fluid cells / total cells.
    double porosity() const { return porosity_; }
    std::size_t fluid_cells() const { return fluid_count_; }
    /// Semi-axes of the analytic grain along y_1 and y_2; zero for Custom.
    std::array<double, 2> semi_axes() const { return semi_axes_; }
    double target_porosity() const { return target_porosity_; }

    /// True when every fluid cell is reachable from every other on the torus.
    bool fluid_connected() const;

private:
    UnitCellGeometry(int resolution, std::vector<std::uint8_t> mask, GrainShape kind);

    int resolution_ = 0;
    std::vector<std::uint8_t> mask_;
    GrainShape kind_ = GrainShape::Custom;
    double porosity_ = 1.0;
    std::size_t fluid_count_ = 0;
    std::array<double, 2> semi_axes_{0.0, 0.0};
    double target_porosity_ = 1.0;
};

struct CellSolverOptions {
    double tol = 1e-10; // relative residual ||b - A w|| / ||b||
    int max_iter = 0;   // 0 selects 40 * resolution + 1000
};

/// Corrector fields over the full grid; grain entries are zero.
struct CellSolution {
    int resolution = 0;
    std::array<std::vector<double>, kDim> w;
    std::array<int, kDim> iterations{0, 0};
    std::array<double, kDim> residual{0.0, 0.0};

    double at(int direction, int ix, int iy) const {
        return w[static_cast<std::size_t>(direction)]
                [static_cast<std::size_t>(iy) * static_cast<std::size_t>(resolution) +
                 static_cast<std::size_t>(ix)];
    }
};

/// Single-direction solve. Returns the full-grid corrector field.
std::vector<double> solve_corrector(const UnitCellGeometry& geom, double diffusivity, int direction,
                                    const CellSolverOptions& opts = {}, int* iterations = nullptr,
                                    double* residual = nullptr);

/// Both directions, run concurrently.
CellSolution solve_cell_problems(const UnitCellGeometry& geom, double diffusivity,
                                 const CellSolverOptions& opts = {});

/// Mean of a full-grid field over the fluid cells.
double fluid_mean(const UnitCellGeometry& geom, const std::vector<double>& field);

struct EffectiveTensors {
    Eigen::Matrix2d diffusion = Eigen::Matrix2d::Zero();  // D-bar [m^2/s]
    Eigen::Matrix2d tortuosity = Eigen::Matrix2d::Zero(); // T* = D-bar / (d phi)
    double porosity = 1.0;
    double species_diffusivity = 0.0;
};

/**
 * D_jk = sum over fluid-fluid faces normal to e_j of h^2 d (delta_jk + dw_k/dy_j).
 * This is midpoint quadrature of the flux over the fluid part of Y, taken on
 * the faces where the discrete gradient lives, which makes D exactly the
 * discrete energy form and hence symmetric.
 */
EffectiveTensors effective_diffusion(const UnitCellGeometry& geom, const CellSolution& sol,
                                     double species_diffusivity);

/// Tensors for every diffusivity in `species`, sharing one cell solve.
std::vector<EffectiveTensors> effective_diffusion_ladder(const UnitCellGeometry& geom,
                                                         const CellSolution& sol,
                                                         const std::vector<double>& species);

struct TensorBounds {
    double lower = 0.0; // phi * harmonic mean of d(y) / d
    double upper = 1.0; // phi
    std::array<double, 2> eigenvalues{0.0, 0.0}; // of D-bar / d
    bool within(double rel_tol) const;
};

TensorBounds tensor_bounds(const UnitCellGeometry& geom, const EffectiveTensors& t);

/// Grain boundary length |Gamma| from a four-direction Cauchy-Crofton count.
double grain_perimeter(const UnitCellGeometry& geom);

struct DepositionConstants {
    double attachment = 0.0; // A = Bi * a * |Gamma|
    double detachment = 0.0; // B = Bi * b * |Gamma|
    double perimeter = 0.0;
};

DepositionConstants effective_deposition(const UnitCellGeometry& geom, double surface_rate_a,
                                         double surface_rate_b, double biot);

const char* to_string(GrainShape shape);

} // namespace colloid::homogenize
