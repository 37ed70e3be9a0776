#include "mcms/distribution.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>

namespace mcms::dist {

using nlohmann::json;

std::string_view to_string(DistErrc code) {
    switch (code) {
        case DistErrc::VersionNotIncreased: return "VersionNotIncreased";
        case DistErrc::MalformedBundle: return "MalformedBundle";
        case DistErrc::StorageFailure: return "StorageFailure";
        case DistErrc::UpstreamUnreachable: return "UpstreamUnreachable";
        case DistErrc::DigestMismatch: return "DigestMismatch";
        case DistErrc::UnknownApp: return "UnknownApp";
        case DistErrc::NotFound: return "NotFound";
        case DistErrc::InvalidConfig: return "InvalidConfig";
        case DistErrc::Unauthorized: return "Unauthorized";
        case DistErrc::ProtocolError: return "ProtocolError";
    }
    return "Unknown";
}

std::string_view to_string(Role role) {
    switch (role) {
        case Role::central: return "central";
        case Role::subserver: return "sub";
        case Role::kiosk: return "kiosk";
    }
    return "unknown";
}

std::optional<Role> role_from_string(std::string_view s) {
    if (s == "central") return Role::central;
    if (s == "sub" || s == "subserver") return Role::subserver;
    if (s == "kiosk") return Role::kiosk;
    return std::nullopt;
}

bool category_matches(const CategorySet& set, const std::string& category) {
    return set.empty() || set.count(category) > 0;
}

namespace {

Digest digest_field(const json& j, const char* key) {
    const auto d = Digest::from_hex(j.at(key).get<std::string>());
    if (!d) throw DistError(DistErrc::ProtocolError, std::string("bad digest in ") + key);
    return *d;
}

json release_json(const Release& r) {
    return {{"app_id", r.app_id}, {"version", r.version},     {"category", r.category},
            {"digest", r.digest.hex()}, {"size", r.size}, {"published_seq", r.published_seq}};
}

Release release_of(const json& j) {
    Release r;
    r.app_id = j.at("app_id").get<std::string>();
    r.version = j.at("version").get<std::uint32_t>();
    r.category = j.at("category").get<std::string>();
    r.digest = digest_field(j, "digest");
    r.size = j.at("size").get<std::uint64_t>();
    r.published_seq = j.at("published_seq").get<std::uint64_t>();
    return r;
}

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw DistError(DistErrc::ProtocolError, std::string(what) + ": " + e.what());
    }
}

} // namespace

std::string release_to_json(const Release& r) { return release_json(r).dump(); }

Release release_from_json(std::string_view text) {
    return guarded("release", [&] { return release_of(json::parse(text)); });
}

std::string releases_to_json(const std::vector<Release>& rs) {
    json arr = json::array();
    for (const auto& r : rs) arr.push_back(release_json(r));
    return arr.dump();
}

std::vector<Release> releases_from_json(std::string_view text) {
    return guarded("catalog", [&] {
        const json j = json::parse(text);
        if (!j.is_array()) throw DistError(DistErrc::ProtocolError, "catalog: expected an array");
        std::vector<Release> out;
        for (const auto& e : j) out.push_back(release_of(e));
        return out;
    });
}

std::vector<Release> Catalog::since(const CategorySet& categories, std::uint64_t since_seq) const {
    std::vector<Release> out;
    for (const auto& [id, r] : entries) {
        if (r.published_seq > since_seq && category_matches(categories, r.category)) out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const Release& a, const Release& b) { return a.published_seq < b.published_seq; });
    return out;
}

std::string state_to_json(const SyncState& s) {
    json held = json::object();
    for (const auto& [id, h] : s.held) {
        held[id] = {{"version", h.version}, {"digest", h.digest.hex()}, {"category", h.category},
                    {"title", h.title},     {"size", h.size},           {"local_seq", h.local_seq}};
    }
    json j = {{"node_id", s.node_id},
              {"role", std::string(to_string(s.role))},
              {"categories", s.categories},
              {"held", held},
              {"seq", s.seq},
              {"last_seq_seen", s.last_seq_seen},
              {"auto_broadcast", s.auto_broadcast ? json(*s.auto_broadcast) : json(nullptr)}};
    return j.dump(2);
}

SyncState state_from_json(std::string_view text) {
    return guarded("state.json", [&] {
        const json j = json::parse(text);
        SyncState s;
        s.node_id = j.at("node_id").get<std::string>();
        const auto role = role_from_string(j.at("role").get<std::string>());
        if (!role) throw DistError(DistErrc::ProtocolError, "state.json: bad role");
        s.role = *role;
        s.categories = j.at("categories").get<CategorySet>();
        for (const auto& [id, h] : j.at("held").items()) {
            s.held[id] = HeldApp{h.at("version").get<std::uint32_t>(), digest_field(h, "digest"),
                                 h.at("category").get<std::string>(), h.at("title").get<std::string>(),
                                 h.at("size").get<std::uint64_t>(), h.at("local_seq").get<std::uint64_t>()};
        }
        s.seq = j.at("seq").get<std::uint64_t>();
        s.last_seq_seen = j.at("last_seq_seen").get<std::uint64_t>();
        if (!j.at("auto_broadcast").is_null()) s.auto_broadcast = j.at("auto_broadcast").get<std::string>();
        return s;
    });
}

NodeConfig parse_node_config(std::string_view text, const std::filesystem::path& base_dir) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DistError(DistErrc::InvalidConfig, "node config is not a JSON object");
    static const std::set<std::string> known = {"node_id", "role",  "listen",         "upstream_url",
                                                "categories", "store_dir", "sync_interval_s"};
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw DistError(DistErrc::InvalidConfig, "unknown field " + k);
    }
    try {
        NodeConfig c;
        const auto role = role_from_string(j.at("role").get<std::string>());
        if (!role) throw DistError(DistErrc::InvalidConfig, "role must be central, sub or kiosk");
        c.role = *role;
        c.node_id = j.value("node_id", std::string(to_string(c.role)));
        c.listen = j.value("listen", std::string("127.0.0.1:0"));
        c.upstream_url = j.value("upstream_url", std::string());
        c.categories = j.value("categories", CategorySet{});
        c.store_dir = j.at("store_dir").get<std::string>();
        if (c.store_dir.is_relative()) c.store_dir = base_dir / c.store_dir;
        c.sync_interval_s = j.value("sync_interval_s", 5.0);
        if (c.role != Role::central && c.upstream_url.empty()) {
            throw DistError(DistErrc::InvalidConfig, "upstream_url is required for sub and kiosk nodes");
        }
        if (!(c.sync_interval_s > 0)) throw DistError(DistErrc::InvalidConfig, "sync_interval_s must be positive");
        return c;
    } catch (const json::exception& e) {
        throw DistError(DistErrc::InvalidConfig, e.what());
    }
}

NodeConfig load_node_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DistError(DistErrc::InvalidConfig, "cannot read " + file.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    NodeConfig c = parse_node_config(text, file.parent_path());
    if (const char* token = std::getenv("MCMS_TOKEN")) c.token = token;
    return c;
}

} // namespace mcms::dist
