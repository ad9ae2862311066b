#include "fermicool/occupation.hpp"

#include <cstring>
#include <cstdio>

#include "fermicool/trap.hpp"

namespace fermicool {

double count_atoms(const OccupationState& occ, const LevelLadder& ladder) {
  double total = 0.0;
  for (std::size_t n = 0; n < occ.size(); ++n) {
    total += ladder.degeneracy(static_cast<int>(n)) * occ.occupations[n];
  }
  return total;
}

void recount(OccupationState& occ, const LevelLadder& ladder) {
  occ.atom_count = count_atoms(occ, ladder);
}

std::uint64_t occupation_hash(const OccupationState& occ) {
  std::uint64_t h = 14695981039346656037ull;
  for (double v : occ.occupations) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fermicool
