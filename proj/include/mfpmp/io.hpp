#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfpmp/limits.hpp"

namespace mfpmp {

// %.17g rendering: enough digits to round-trip any double, fixed format
// for byte-stable artifacts.
std::string format_double(double v);

// FNV-1a 64-bit over a byte string, rendered as "fnv1a:%016x".
std::string fnv1a_hex(const std::string& bytes);

// Writes content to path atomically (temp file in the same directory,
// then rename). Creates parent directories.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Artifact headers: every output embeds tool version and config hash.
// CSV artifacts carry them as leading '#' comment lines before the
// header row; columns are comma-separated, '.' decimal, LF endings.
std::string csv_preamble(const std::string& config_hash);

std::string trajectory_csv(const Trajectory& traj, const std::string& config_hash);
std::string bundle_csv(const ExtremalBundle& bundle, const std::string& config_hash);
std::string measure_csv(const EmpiricalMeasure& mu, const std::string& config_hash);
std::string convergence_csv(const ConvergenceReport& report,
                            const std::string& config_hash);

}  // namespace mfpmp
