#include "mfpmp/io.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mfpmp/errors.hpp"
#include "mfpmp/parallel.hpp"
#include "mfpmp/pmp.hpp"
#include "mfpmp/version.hpp"

namespace mfpmp {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }
int num_threads() { return g_threads.load(); }

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(num_threads(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  // Static block partition: worker w handles a contiguous index range.
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const int base = n / workers;
  const int extra = n % workers;
  int start = 0;
  for (int w = 0; w < workers; ++w) {
    const int len = base + (w < extra ? 1 : 0);
    pool.emplace_back([&fn, start, len]() {
      for (int i = start; i < start + len; ++i) fn(i);
    });
    start += len;
  }
  for (auto& t : pool) t.join();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create directory " + target.parent_path().string());
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string csv_preamble(const std::string& config_hash) {
  std::ostringstream os;
  os << "# tool: " << kToolName << " " << kToolVersion << "\n";
  os << "# config_hash: " << config_hash << "\n";
  return os.str();
}

namespace {

void append_state_header(std::ostringstream& os, int m, int N, int d,
                         const char* yname, const char* xname) {
  for (int k = 0; k < m; ++k)
    for (int c = 0; c < d; ++c) os << "," << yname << k << "_" << c;
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < d; ++c) os << "," << xname << i << "_" << c;
}

void append_mat_row(std::ostringstream& os, const Mat& mat) {
  for (int a = 0; a < mat.rows(); ++a)
    for (int c = 0; c < mat.cols(); ++c) os << "," << format_double(mat(a, c));
}

}  // namespace

std::string trajectory_csv(const Trajectory& traj, const std::string& config_hash) {
  std::ostringstream os;
  os << csv_preamble(config_hash);
  const int n = traj.grid.n_steps;
  const SwarmState& s0 = traj.states.front();
  const int m = s0.leaders();
  const int N = s0.followers();
  const int d = static_cast<int>(s0.y.cols() > 0 ? s0.y.cols() : s0.x.cols());
  const int D = traj.control.values.empty()
                    ? 0
                    : static_cast<int>(traj.control.values.front().size());
  os << "t";
  append_state_header(os, m, N, d, "y", "x");
  for (int c = 0; c < D; ++c) os << ",u_" << c;
  os << "\n";
  for (int j = 0; j <= n; ++j) {
    os << format_double(traj.grid.node(j));
    append_mat_row(os, traj.states[j].y);
    append_mat_row(os, traj.states[j].x);
    if (D > 0) {
      const Vec& u = traj.control.values[static_cast<size_t>(std::min(j, n - 1))];
      for (int c = 0; c < D; ++c) os << "," << format_double(u[c]);
    }
    os << "\n";
  }
  return os.str();
}

std::string bundle_csv(const ExtremalBundle& bundle, const std::string& config_hash) {
  std::ostringstream os;
  os << csv_preamble(config_hash);
  os << "# converged: " << (bundle.converged ? "true" : "false") << "\n";
  os << "# iterations: " << bundle.iterations << "\n";
  os << "# final_cost: " << format_double(bundle.final_cost) << "\n";
  const Trajectory& traj = bundle.trajectory;
  const int n = traj.grid.n_steps;
  const SwarmState& s0 = traj.states.front();
  const int m = s0.leaders();
  const int N = s0.followers();
  const int d = static_cast<int>(s0.y.cols() > 0 ? s0.y.cols() : s0.x.cols());
  const int D = bundle.control.values.empty()
                    ? 0
                    : static_cast<int>(bundle.control.values.front().size());
  os << "t";
  append_state_header(os, m, N, d, "y", "x");
  append_state_header(os, m, N, d, "q", "p");
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < d; ++c) os << ",r" << i << "_" << c;
  for (int c = 0; c < D; ++c) os << ",u_" << c;
  os << ",H\n";
  for (int j = 0; j <= n; ++j) {
    os << format_double(traj.grid.node(j));
    append_mat_row(os, traj.states[j].y);
    append_mat_row(os, traj.states[j].x);
    append_mat_row(os, bundle.adjoint[j].q);
    append_mat_row(os, bundle.adjoint[j].p);
    Mat r = bundle.adjoint[j].r();
    append_mat_row(os, r);
    if (D > 0) {
      const Vec& u = bundle.control.values[static_cast<size_t>(std::min(j, n - 1))];
      for (int c = 0; c < D; ++c) os << "," << format_double(u[c]);
    }
    os << "," << format_double(bundle.hamiltonian_series[static_cast<size_t>(j)]);
    os << "\n";
  }
  return os.str();
}

std::string measure_csv(const EmpiricalMeasure& mu, const std::string& config_hash) {
  std::ostringstream os;
  os << csv_preamble(config_hash);
  os << "atom";
  for (int c = 0; c < mu.dim(); ++c) os << ",x_" << c;
  os << "\n";
  for (int i = 0; i < mu.size(); ++i) {
    os << i;
    for (int c = 0; c < mu.dim(); ++c) os << "," << format_double(mu.atoms(i, c));
    os << "\n";
  }
  return os.str();
}

std::string convergence_csv(const ConvergenceReport& report,
                            const std::string& config_hash) {
  std::ostringstream os;
  os << csv_preamble(config_hash);
  os << "# seed: " << report.seed << "\n";
  os << "# wasserstein_p: " << report.wasserstein_p << "\n";
  os << "N,cost,iterations,converged,w1_terminal_prev,control_l1_gap_ref,"
        "r_duplication_gap,note\n";
  for (const auto& row : report.rows) {
    os << row.N << "," << format_double(row.cost) << "," << row.iterations << ","
       << (row.converged ? "true" : "false") << ",";
    if (row.w1_terminal_prev) os << format_double(*row.w1_terminal_prev);
    os << "," << format_double(row.control_l1_gap_ref) << ","
       << format_double(row.r_duplication_gap) << "," << row.note << "\n";
  }
  return os.str();
}

}  // namespace mfpmp
