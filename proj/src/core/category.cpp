#include "core/category.hpp"

#include <string>

#include "core/error.hpp"

namespace lumen {

namespace {
constexpr std::array<std::string_view, kCategoryCount> kNames = {
    "brownfield", "commercial", "construction", "farmland", "forest",
    "grass",      "industrial", "residential",  "retail",
};
}  // namespace

std::string_view category_name(Category c) { return kNames[category_index(c)]; }

std::optional<Category> parse_category(std::string_view token) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == token) return static_cast<Category>(i);
  }
  return std::nullopt;
}

Category category_from_string(std::string_view token) {
  if (auto c = parse_category(token)) return *c;
  throw DomainError("unknown category '" + std::string(token) + "'");
}

}  // namespace lumen
