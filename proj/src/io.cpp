#include "fermicool/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fermicool/errors.hpp"

namespace fermicool {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trace_row(const TraceSample& s, double omega) {
  return format_double(s.time) + "," + format_double(s.time / omega) + "," + format_double(s.t_over_tf) + "," +
         format_double(s.atom_count) + "," + format_double(s.mean_energy) + "," + format_double(s.losses);
}

std::string thermo_row(const ThermoReading& r) {
  return format_double(r.temperature) + "," + format_double(r.t_over_tf) + "," + format_double(r.mu) + "," +
         format_double(r.mean_energy) + "," + format_double(r.atom_count) + "," + format_double(r.fermi_energy) +
         "," + std::string(to_string(r.method));
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  close_out(out, path);
}

void write_trace(const std::filesystem::path& path, std::span<const TraceSample> samples, double omega) {
  auto out = open_out(path);
  out << kTraceHeader << "\n";
  for (const auto& s : samples) out << trace_row(s, omega) << "\n";
  close_out(out, path);
}

void write_snapshot(const std::filesystem::path& path, const OccupationState& occ, const LevelLadder& ladder) {
  auto out = open_out(path);
  out << kSnapshotHeader << "\n";
  for (std::size_t n = 0; n < occ.size(); ++n) {
    const int i = static_cast<int>(n);
    out << n << "," << format_double(ladder.energy(i)) << "," << format_double(ladder.degeneracy(i)) << ","
        << format_double(occ.occupations[n]) << "\n";
  }
  close_out(out, path);
}

void write_rates(const std::filesystem::path& path, const RateMatrix& rates) {
  auto out = open_out(path);
  out << "n,m,gamma_rate\n";
  for (int m = 0; m < rates.gamma_rates.outerSize(); ++m) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(rates.gamma_rates, m); it; ++it) {
      out << it.row() << "," << it.col() << "," << format_double(it.value()) << "\n";
    }
  }
  close_out(out, path);
}

void write_rate_diagnostics(const std::filesystem::path& path, const RateMatrix& rates) {
  auto out = open_out(path);
  out << "m,l,R,Delta,p_exc\n";
  for (const auto& p : rates.excitation.pairs) {
    out << p.m << "," << p.l << "," << format_double(p.inhibition) << "," << format_double(p.overlap) << ","
        << format_double(p.excited) << "\n";
  }
  close_out(out, path);
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw IoError(path.string() + ": header '" + line + "' does not match '" + header + "'");
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
      }
      row.push_back(v);
      p = res.ptr;
      if (p == end) break;
      if (*p != ',') throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected ','");
      ++p;
    }
    if (row.size() != columns) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                    " fields");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  const auto rows = read_csv(path, kSnapshotHeader);
  if (rows.empty()) throw IoError(path.string() + ": no levels");
  Snapshot s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i][0] != static_cast<double>(i)) {
      throw IoError(path.string() + ": level_index must run 0, 1, 2, ... (row " + std::to_string(i + 2) + ")");
    }
    s.energies.push_back(rows[i][1]);
    s.degeneracies.push_back(rows[i][2]);
    s.occupations.push_back(rows[i][3]);
  }
  return s;
}

OccupationState snapshot_state(const Snapshot& snap, const LevelLadder& ladder) {
  if (snap.occupations.size() != ladder.size()) {
    throw ConfigError("snapshot has " + std::to_string(snap.occupations.size()) + " levels, trap has " +
                      std::to_string(ladder.size()));
  }
  for (std::size_t n = 0; n < ladder.size(); ++n) {
    const int i = static_cast<int>(n);
    if (std::abs(snap.energies[n] - ladder.energy(i)) > 1e-9 * std::max(1.0, std::abs(ladder.energy(i))) ||
        snap.degeneracies[n] != ladder.degeneracy(i)) {
      throw ConfigError("snapshot level " + std::to_string(n) + " does not match the trap ladder");
    }
    if (!(snap.occupations[n] >= 0.0 && snap.occupations[n] <= 1.0)) {
      throw ConfigError("snapshot occupation at level " + std::to_string(n) + " outside [0, 1]");
    }
  }
  OccupationState occ;
  occ.occupations = snap.occupations;
  recount(occ, ladder);
  return occ;
}

TrapSpec infer_trap(const Snapshot& snap) {
  TrapSpec spec;
  const auto n = snap.energies.size();
  if (n < 2) throw ConfigError("snapshot needs at least two levels");
  spec.n_max = static_cast<int>(n) - 1;
  bool one_d = true;
  bool three_d = true;
  for (std::size_t i = 0; i < n; ++i) {
    one_d = one_d && snap.degeneracies[i] == 1.0;
    three_d = three_d && snap.degeneracies[i] == static_cast<double>(shell_degeneracy(static_cast<int>(i)));
  }
  if (!one_d && !three_d) throw ConfigError("snapshot degeneracies match neither a 1D ladder nor 3D shells");
  spec.dimension = one_d ? Dimension::OneD : Dimension::ThreeDIsotropic;
  const double top = static_cast<double>(spec.n_max);
  spec.alpha = (1.0 - snap.energies.back() / top) / top;
  if (std::abs(spec.alpha) < 1e-15) spec.alpha = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ladder_energy(static_cast<int>(i), spec.alpha);
    if (std::abs(e - snap.energies[i]) > 1e-9 * std::max(1.0, std::abs(e))) {
      throw ConfigError("snapshot energies do not follow n (1 - alpha n)");
    }
  }
  return spec;
}

}  // namespace fermicool
