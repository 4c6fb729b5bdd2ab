#include "vecsim/channel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "vecsim/errors.hpp"

namespace vecsim {

ComplexMatrix multiply(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols != b.rows) throw ContractViolation("multiply: inner dimensions differ");
    ComplexMatrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const cxd aik = a(i, k);
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

ComplexMatrix conjugate_transpose(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = std::conj(a(i, j));
    return out;
}

double bessel_j0(double x) {
    constexpr int kPoints = 160;
    struct Table {
        std::array<double, kPoints> sin_theta;
        Table() {
            for (int k = 0; k < kPoints; ++k)
                sin_theta[static_cast<std::size_t>(k)] = std::sin((k + 0.5) * M_PI / kPoints);
        }
    };
    static const Table table;
    double sum = 0.0;
    for (int k = 0; k < kPoints; ++k) sum += std::cos(x * table.sin_theta[static_cast<std::size_t>(k)]);
    return sum / kPoints;
}

double path_loss(const Vec3& vu_pos, const Vec3& bs_pos, double ref_gain, double exponent) {
    const double dist = norm(vu_pos - bs_pos);
    if (dist <= 0.0) throw ConfigError("path_loss: zero distance between vehicle and BS");
    return ref_gain / std::pow(dist, exponent);
}

double doppler_correlation(const VehiclePose& pose, const Vec3& bs_pos, double wavelength,
                           double slot_duration) {
    const Vec3 to_bs = bs_pos - position(pose);
    const double dist = norm(to_bs);
    if (dist <= 0.0) throw ConfigError("doppler_correlation: vehicle at the BS position");
    const double cos_theta = to_bs.x / dist;  // travel direction is (1,0,0)
    const double doppler = pose.velocity / wavelength * cos_theta;
    return bessel_j0(2.0 * M_PI * doppler * slot_duration);
}

std::vector<cxd> init_small_scale(int n, Rng& rng) {
    std::vector<cxd> h(static_cast<std::size_t>(n));
    for (auto& entry : h) entry = rng.complex_normal();
    return h;
}

void evolve_small_scale(SmallScaleState& state, Rng& rng) {
    if (state.fading.size() != state.correlation.size())
        throw ContractViolation("evolve_small_scale: one correlation per vehicle required");
    for (std::size_t m = 0; m < state.fading.size(); ++m) {
        const double rho = state.correlation[m];
        if (std::fabs(rho) > 1.0)
            throw ContractViolation("evolve_small_scale: |correlation| must be <= 1");
        const double innovation_scale = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        for (auto& entry : state.fading[m])
            entry = rho * entry + innovation_scale * rng.complex_normal();
    }
}

ComplexMatrix compose_channel(const SmallScaleState& small_scale,
                              const std::vector<double>& path_losses) {
    const std::size_t m_count = small_scale.fading.size();
    if (path_losses.size() != m_count)
        throw ContractViolation("compose_channel: one path loss per vehicle required");
    if (m_count == 0) throw ContractViolation("compose_channel: no vehicles");
    const int n = static_cast<int>(small_scale.fading.front().size());
    ComplexMatrix h(n, static_cast<int>(m_count));
    for (std::size_t m = 0; m < m_count; ++m) {
        if (static_cast<int>(small_scale.fading[m].size()) != n)
            throw ContractViolation("compose_channel: fading vectors must share one length");
        const double amp = std::sqrt(path_losses[m]);
        for (int i = 0; i < n; ++i)
            h(i, static_cast<int>(m)) = amp * small_scale.fading[m][static_cast<std::size_t>(i)];
    }
    return h;
}

namespace {

// The pseudo-inverse internals run in extended precision: the Gram matrix
// squares the channel's condition number, and the per-vehicle noise gains
// feed SINRs whose tests demand far tighter agreement than double-precision
// forward error allows on badly conditioned draws.
using cxl = std::complex<long double>;

struct LMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<cxl> data;
    LMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}
    cxl& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    const cxl& operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * cols + j];
    }
};

LMatrix lift(const ComplexMatrix& a) {
    LMatrix out(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j)
            out(i, j) = cxl(a(i, j).real(), a(i, j).imag());
    return out;
}

LMatrix lmultiply(const LMatrix& a, const LMatrix& b) {
    LMatrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const cxl aik = a(i, k);
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

LMatrix lconj_transpose(const LMatrix& a) {
    LMatrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = std::conj(a(i, j));
    return out;
}

long double inf_norm(const LMatrix& a) {
    long double worst = 0.0L;
    for (int i = 0; i < a.rows; ++i) {
        long double row_sum = 0.0L;
        for (int j = 0; j < a.cols; ++j) row_sum += std::abs(a(i, j));
        worst = std::max(worst, row_sum);
    }
    return worst;
}

// Gauss-Jordan inversion with partial pivoting of a small complex matrix.
LMatrix invert(const LMatrix& a) {
    const int n = a.rows;
    LMatrix work = a;
    LMatrix inv(n, n);
    for (int i = 0; i < n; ++i) inv(i, i) = 1.0L;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        long double best = std::abs(work(col, col));
        for (int r = col + 1; r < n; ++r) {
            const long double mag = std::abs(work(r, col));
            if (mag > best) {
                best = mag;
                pivot = r;
            }
        }
        if (best == 0.0L) throw SingularChannelError("Gram matrix has a zero pivot");
        if (pivot != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(work(pivot, j), work(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        }
        const cxl diag = work(col, col);
        for (int j = 0; j < n; ++j) {
            work(col, j) /= diag;
            inv(col, j) /= diag;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const cxl factor = work(r, col);
            if (factor == cxl{}) continue;
            for (int j = 0; j < n; ++j) {
                work(r, j) -= factor * work(col, j);
                inv(r, j) -= factor * inv(col, j);
            }
        }
    }
    return inv;
}

// One Newton step X <- X(2I - AX) sharpens the inverse of a moderately
// ill-conditioned Gram matrix to machine-level residual.
LMatrix refine_inverse(const LMatrix& a, const LMatrix& x) {
    LMatrix ax = lmultiply(a, x);
    for (int i = 0; i < ax.rows; ++i)
        for (int j = 0; j < ax.cols; ++j) ax(i, j) = (i == j ? cxl{2.0L} : cxl{}) - ax(i, j);
    return lmultiply(x, ax);
}

} // namespace

ZfResult zf_detector(const ComplexMatrix& h) {
    const int n = h.rows;
    const int m = h.cols;
    if (m < 1 || m > n)
        throw ContractViolation("zf_detector: need 1 <= vehicles <= antennas");
    const LMatrix hl = lift(h);
    const LMatrix hh = lconj_transpose(hl);
    const LMatrix gram = lmultiply(hh, hl);
    LMatrix gram_inv = refine_inverse(gram, invert(gram));
    const double cond = static_cast<double>(inf_norm(gram) * inf_norm(gram_inv));
    if (!(cond < 1e12))
        throw SingularChannelError("Gram matrix condition estimate " + std::to_string(cond));
    const LMatrix detector = lmultiply(gram_inv, hh);
    ZfResult result;
    result.detector = ComplexMatrix(m, n);
    result.g_norm_sq.resize(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) {
        long double s = 0.0L;
        for (int c = 0; c < n; ++c) {
            const cxl entry = detector(r, c);
            result.detector(r, c) = cxd(static_cast<double>(entry.real()),
                                        static_cast<double>(entry.imag()));
            s += std::norm(entry);
        }
        result.g_norm_sq[static_cast<std::size_t>(r)] = static_cast<double>(s);
    }
    return result;
}

double sinr(double offload_power, double g_norm_sq, double noise_power) {
    if (offload_power < 0.0) throw ContractViolation("sinr: negative transmit power");
    if (g_norm_sq <= 0.0 || noise_power <= 0.0)
        throw ContractViolation("sinr: noise amplification and noise power must be positive");
    return offload_power / (g_norm_sq * noise_power);
}

ChannelSnapshot make_snapshot(const ComplexMatrix& h, const std::vector<double>& offload_powers,
                              double noise_power) {
    ChannelSnapshot snap;
    snap.h = h;
    ZfResult zf = zf_detector(h);
    snap.g = std::move(zf.detector);
    snap.g_norm_sq = std::move(zf.g_norm_sq);
    if (offload_powers.size() != snap.g_norm_sq.size())
        throw ContractViolation("make_snapshot: one offload power per vehicle required");
    snap.sinr.resize(snap.g_norm_sq.size());
    for (std::size_t i = 0; i < snap.sinr.size(); ++i)
        snap.sinr[i] = sinr(offload_powers[i], snap.g_norm_sq[i], noise_power);
    return snap;
}

} // namespace vecsim
