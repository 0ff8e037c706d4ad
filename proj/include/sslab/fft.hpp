#pragma once

#include <complex>
#include <map>
#include <utility>

#include <Eigen/Dense>
#include <fftw3.h>

namespace sslab::detail {

/// Signed coordinate of a periodic grid index, in (-n/2, n/2].
inline double wrapped_coord(Eigen::Index idx, Eigen::Index n) {
    const double x = static_cast<double>(idx);
    return idx <= n / 2 ? x : x - static_cast<double>(n);
}

/// 2D FFT over Eigen matrices via FFTW. Plans are cached per shape with
/// FFTW_ESTIMATE (deterministic algorithm choice) and FFTW_UNALIGNED so the
/// new-array execute interface accepts any buffer.
class Fft2D {
  public:
    static Eigen::MatrixXcd forward(const Eigen::MatrixXcd& in) { return run(in, FFTW_FORWARD); }

    /// Inverse transform, normalized by 1/(rows*cols).
    static Eigen::MatrixXcd inverse(const Eigen::MatrixXcd& in) {
        Eigen::MatrixXcd out = run(in, FFTW_BACKWARD);
        out /= static_cast<double>(in.rows() * in.cols());
        return out;
    }

    static Eigen::MatrixXcd forward_real(const Eigen::MatrixXd& in) {
        return forward(in.cast<std::complex<double>>());
    }

  private:
    static Eigen::MatrixXcd run(const Eigen::MatrixXcd& in, int sign) {
        Eigen::MatrixXcd src = in;  // FFTW may not touch const input buffers
        Eigen::MatrixXcd out(in.rows(), in.cols());
        const fftw_plan plan = cached_plan(in.rows(), in.cols(), sign);
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(src.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
        return out;
    }

    static fftw_plan cached_plan(Eigen::Index rows, Eigen::Index cols, int sign) {
        static std::map<std::tuple<Eigen::Index, Eigen::Index, int>, fftw_plan> cache;
        const auto key = std::make_tuple(rows, cols, sign);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        // column-major rows x cols seen as row-major cols x rows; consistent
        // use on both factors of a product keeps convolutions correct
        Eigen::MatrixXcd a(rows, cols), b(rows, cols);
        const fftw_plan plan = fftw_plan_dft_2d(
            static_cast<int>(cols), static_cast<int>(rows),
            reinterpret_cast<fftw_complex*>(a.data()), reinterpret_cast<fftw_complex*>(b.data()),
            sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        cache.emplace(key, plan);
        return plan;
    }
};

}  // namespace sslab::detail
