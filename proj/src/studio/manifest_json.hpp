#pragma once

// JSON conversions shared by the manifest reader/writer and the studio API.

#include "mcms/content_model.hpp"
#include "mcms/studio.hpp"

#include "json.hpp"

#include <initializer_list>
#include <string>

namespace mcms::studio::detail {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

ojson asset_to_json(const model::AssetRef& a);
ojson item_to_json(const model::ContentItem& item);
ojson theme_to_json(const model::Theme& t);
ojson page_to_json(const model::PageNode& p);
ojson project_to_ojson(const model::Project& p);

/// Readers take the JSON pointer of `j` for error messages.
[[noreturn]] void syntax(const std::string& pointer, const std::string& what);
void only_fields(const json& j, const std::string& pointer, std::initializer_list<std::string_view> allowed);
const json& member(const json& j, const std::string& pointer, const char* key);
std::string get_string(const json& j, const std::string& pointer);
std::uint32_t get_u32(const json& j, const std::string& pointer);
double get_number(const json& j, const std::string& pointer);

model::AssetRef asset_from_json(const json& j, const std::string& pointer);
std::optional<model::AssetRef> optional_asset(const json& j, const std::string& pointer);
model::ContentItem item_from_json(const json& j, const std::string& pointer);
std::vector<model::ContentItem> items_from_json(const json& j, const std::string& pointer);
model::Theme theme_from_json(const json& j, const std::string& pointer, model::Theme base = {});
model::PageNode page_from_json(const json& j, const std::string& pointer);
std::vector<std::string> strings_from_json(const json& j, const std::string& pointer);

ojson report_to_ojson(const model::ValidationReport& r);

} // namespace mcms::studio::detail
