#pragma once

#include "mcms/bytes.hpp"
#include "mcms/content_model.hpp"
#include "mcms/error.hpp"
#include "mcms/text_kit.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mcms::studio {

enum class StudioErrc {
    ManifestSyntax,
    ManifestUnknownField,
    IoError,
};

std::string_view to_string(StudioErrc code);
using StudioError = Error<StudioErrc>;

inline constexpr std::string_view kManifestName = "project.json";
inline constexpr std::string_view kGlyphsName = "glyphs.txt";
inline constexpr std::string_view kAssetsDir = "assets";

/// Canonical manifest text (fixed field order, two-space indent, trailing newline).
std::string project_to_json(const model::Project& project);
/// Strict parse; `asset_dir` is attached to the result. Throws ManifestSyntax (with line/column or JSON pointer)
/// and ManifestUnknownField.
model::Project project_from_json(std::string_view json, const std::filesystem::path& asset_dir);

/// Reads `<dir>/project.json`; asset_dir becomes `<dir>/assets`. Throws IoError when unreadable.
model::Project load_project(const std::filesystem::path& dir);
/// Atomic write of `<dir>/project.json` (temp file + rename).
void save_project(const model::Project& project, const std::filesystem::path& dir);

/// `<dir>/glyphs.txt` when present.
std::optional<text::GlyphSheet> load_glyphs(const std::filesystem::path& file);

/// Project at `dir` compiled with `glyphs` (default `<dir>/glyphs.txt` if it exists).
Bytes compile_dir(const std::filesystem::path& dir, const std::optional<std::filesystem::path>& glyphs = std::nullopt);

std::string report_to_json(const model::ValidationReport& report);

/// Starter project: one root page with a welcome text.
model::Project scaffold_project(std::string app_id);

struct StudioOptions {
    std::vector<std::string> fleet;  // node base URLs for /api/fleet
    std::optional<std::filesystem::path> sim_report;  // served by /api/sim/latest
    std::optional<std::filesystem::path> static_dir;  // console assets mounted at /
    std::string token;                                // outbound bearer token
    double upstream_timeout_s{3.0};
};

/// Authoring API over one project directory. Mutations are serialized and persisted atomically.
class Studio {
public:
    Studio(std::filesystem::path dir, StudioOptions options = {});
    ~Studio();
    Studio(const Studio&) = delete;
    Studio& operator=(const Studio&) = delete;

    int start(const std::string& host, int port);
    void run(const std::string& host, int port);
    void stop();
    [[nodiscard]] std::string url() const;
    [[nodiscard]] std::uint64_t revision() const;
    [[nodiscard]] model::Project project() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Whole CLI. Returns the process exit code: 0 ok, 1 usage, 2 validation, 3 I/O, 4 remote/protocol.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace mcms::studio
