#pragma once

#include <complex>
#include <vector>

#include "vecsim/rng.hpp"
#include "vecsim/scenario.hpp"

namespace vecsim {

using cxd = std::complex<double>;

// Minimal dense row-major complex matrix; sized for antenna-count problems.
struct ComplexMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<cxd> data;

    ComplexMatrix() = default;
    ComplexMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}

    cxd& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const cxd& operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
};

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix conjugate_transpose(const ComplexMatrix& a);

// Zeroth-order Bessel function of the first kind, evaluated by midpoint
// quadrature of the integral form (1/pi) * int_0^pi cos(x sin t) dt.  The
// rule is spectrally accurate for periodic integrands; absolute error stays
// below 1e-12 for |x| up to a few hundred.
double bessel_j0(double x);

// Large-scale gain between a vehicle and the base station:
// ref_gain / distance^exponent.
double path_loss(const Vec3& vu_pos, const Vec3& bs_pos, double ref_gain, double exponent);

// Slot-to-slot fading correlation of a moving vehicle: J0(2*pi*f_d*tau0)
// with Doppler shift f_d = (v / wavelength) * cos(angle between the travel
// direction (1,0,0) and the direction towards the base station).
double doppler_correlation(const VehiclePose& pose, const Vec3& bs_pos, double wavelength,
                           double slot_duration);

// Time-correlated small-scale fading of every active vehicle.  Entry m of
// `fading` is the length-N channel vector of vehicle m; `correlation[m]` is
// its per-slot fading correlation.
struct SmallScaleState {
    std::vector<std::vector<cxd>> fading;
    std::vector<double> correlation;
};

// Draw an initial standard-complex-normal fading vector of length n.
std::vector<cxd> init_small_scale(int n, Rng& rng);

// First-order autoregressive fading step, in place:
// h <- rho*h + sqrt(1-rho^2)*e with e standard complex normal per entry.
// The innovation e is independent of the past state.  Vehicles are updated
// in index order, antennas in ascending order (fixed draw order).
void evolve_small_scale(SmallScaleState& state, Rng& rng);

// Stack per-vehicle channel columns h_m * sqrt(path_loss_m) into the N x M
// uplink channel matrix.
ComplexMatrix compose_channel(const SmallScaleState& small_scale,
                              const std::vector<double>& path_losses);

struct ZfResult {
    ComplexMatrix detector;           // M x N, rows recover each vehicle's symbol
    std::vector<double> g_norm_sq;    // squared row norms; noise amplification per vehicle
};

// Zero-forcing detector G = (H^H H)^{-1} H^H.  The Gram matrix is inverted by
// complex Gaussian elimination with partial pivoting (M <= antenna count, so
// the system is tiny) followed by one Newton refinement pass; an infinity-norm
// condition estimate above 1e12 throws SingularChannelError.
ZfResult zf_detector(const ComplexMatrix& h);

// Post-detection signal-to-interference-plus-noise ratio of one vehicle.
double sinr(double offload_power, double g_norm_sq, double noise_power);

// Complete per-slot channel picture.
struct ChannelSnapshot {
    ComplexMatrix h;                  // N x M
    ComplexMatrix g;                  // M x N
    std::vector<double> g_norm_sq;    // per vehicle
    std::vector<double> sinr;         // per vehicle, given its offload power
};

ChannelSnapshot make_snapshot(const ComplexMatrix& h, const std::vector<double>& offload_powers,
                              double noise_power);

} // namespace vecsim
