#include <cstdlib>
#include <string_view>

#include "epac/kernels.hpp"

namespace epac::kernels {

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const auto* t = avx2_table()) out.push_back(t);
  if (const auto* t = neon_table()) out.push_back(t);
  return out;
}

const KernelTable& active() {
  static const KernelTable& chosen = [&]() -> const KernelTable& {
    auto tables = available_tables();
    if (const char* env = std::getenv("EPAC_SIMD")) {
      for (const auto* t : tables)
        if (t->name == std::string_view(env)) return *t;
    }
    return *tables.back();
  }();
  return chosen;
}

}  // namespace epac::kernels
