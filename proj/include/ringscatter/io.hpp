#pragma once

#include "ringscatter/common.hpp"
#include "ringscatter/coupling.hpp"
#include "ringscatter/dynamics.hpp"
#include "ringscatter/farfield.hpp"
#include "ringscatter/spectrum.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace ringscatter {

// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace detail

template <class Scalar>
void write_spectrum_csv(const std::filesystem::path& path, const EigenSystem<Scalar>& sys,
                        const DecayRates<Scalar>& rates) {
  auto out = detail::open_output(path);
  out << "mode_index,decay_rate_over_Gamma,shift_over_Gamma\n";
  for (int m = 0; m < sys.size(); ++m)
    out << m + 1 << ',' << format_g17(static_cast<double>(rates.rates(m))) << ','
        << format_g17(static_cast<double>(sys.lambdas(m).imag())) << '\n';
  detail::finish_output(out, path);
}

template <class Scalar>
void write_weightings_csv(const std::filesystem::path& path, const VecX<Scalar>& w) {
  auto out = detail::open_output(path);
  out << "mode_index,weighting\n";
  for (Eigen::Index m = 0; m < w.size(); ++m)
    out << m + 1 << ',' << format_g17(static_cast<double>(w(m))) << '\n';
  detail::finish_output(out, path);
}

template <class Scalar>
void write_trace_csv(const std::filesystem::path& path, const DecayTrace<Scalar>& trace) {
  auto out = detail::open_output(path);
  out << "t,re_h,im_h,intensity\n";
  for (Eigen::Index k = 0; k < trace.times.size(); ++k)
    out << format_g17(static_cast<double>(trace.times(k))) << ','
        << format_g17(static_cast<double>(trace.h(k).real())) << ','
        << format_g17(static_cast<double>(trace.h(k).imag())) << ','
        << format_g17(static_cast<double>(trace.intensity(k))) << '\n';
  detail::finish_output(out, path);
}

template <class Scalar>
void write_farfield_csv(const std::filesystem::path& path, const FarFieldMap<Scalar>& map) {
  auto out = detail::open_output(path);
  out << "theta,phi,omega_f\n";
  for (Eigen::Index i = 0; i < map.theta.size(); ++i)
    for (Eigen::Index j = 0; j < map.phi.size(); ++j)
      out << format_g17(static_cast<double>(map.theta(i))) << ','
          << format_g17(static_cast<double>(map.phi(j))) << ','
          << format_g17(static_cast<double>(map.values(i, j))) << '\n';
  detail::finish_output(out, path);
}

template <class Scalar>
void write_matrix_csv(const std::filesystem::path& path, const CouplingMatrix<Scalar>& cm) {
  auto out = detail::open_output(path);
  out << "row,col,re,im\n";
  for (Eigen::Index i = 0; i < cm.m.rows(); ++i)
    for (Eigen::Index j = 0; j < cm.m.cols(); ++j)
      out << i + 1 << ',' << j + 1 << ',' << format_g17(static_cast<double>(cm.m(i, j).real())) << ','
          << format_g17(static_cast<double>(cm.m(i, j).imag())) << '\n';
  detail::finish_output(out, path);
}

}  // namespace ringscatter
