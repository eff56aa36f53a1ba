#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace lumen {

enum class Category : std::uint8_t {
  kBrownfield,
  kCommercial,
  kConstruction,
  kFarmland,
  kForest,
  kGrass,
  kIndustrial,
  kResidential,
  kRetail,
};

inline constexpr std::size_t kCategoryCount = 9;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::kBrownfield, Category::kCommercial, Category::kConstruction,
    Category::kFarmland,   Category::kForest,     Category::kGrass,
    Category::kIndustrial, Category::kResidential, Category::kRetail,
};

std::string_view category_name(Category c);
std::optional<Category> parse_category(std::string_view token);

// Throws DomainError naming the token.
Category category_from_string(std::string_view token);

inline constexpr std::size_t category_index(Category c) {
  return static_cast<std::size_t>(c);
}

}  // namespace lumen
