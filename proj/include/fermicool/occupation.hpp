#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fermicool {

class LevelLadder;

/// Mean occupations per level (1D) or shell-mean occupations (3D).
struct OccupationState {
  std::vector<double> occupations;
  double atom_count = 0;  // sum_n g_n N_n
  double time = 0;        // 1/omega
  double losses_cumulative = 0;

  std::size_t size() const { return occupations.size(); }
  double operator[](std::size_t n) const { return occupations[n]; }
};

/// Degeneracy-weighted sum of the occupations.
double count_atoms(const OccupationState& occ, const LevelLadder& ladder);

/// Recomputes atom_count from the occupations.
void recount(OccupationState& occ, const LevelLadder& ladder);

/// FNV-1a hash of the occupation bytes, used to tag rate snapshots.
std::uint64_t occupation_hash(const OccupationState& occ);
std::string hash_hex(std::uint64_t h);

}  // namespace fermicool
