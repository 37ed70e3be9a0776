#pragma once

#include "mcms/bytes.hpp"
#include "mcms/digest.hpp"
#include "mcms/error.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mcms::dist {

enum class DistErrc {
    VersionNotIncreased,
    MalformedBundle,
    StorageFailure,
    UpstreamUnreachable,
    DigestMismatch,
    UnknownApp,
    NotFound,
    InvalidConfig,
    Unauthorized,
    ProtocolError,
};

std::string_view to_string(DistErrc code);
using DistError = Error<DistErrc>;

enum class Role { central, subserver, kiosk };
std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view s);

/// Empty set means "every category".
using CategorySet = std::set<std::string>;
bool category_matches(const CategorySet& set, const std::string& category);

struct Release {
    std::string app_id;
    std::uint32_t version{};
    std::string category;
    Digest digest;
    std::uint64_t size{};
    std::uint64_t published_seq{};

    friend bool operator==(const Release&, const Release&) = default;
};

std::string release_to_json(const Release& r);
Release release_from_json(std::string_view json);
std::string releases_to_json(const std::vector<Release>& rs);
std::vector<Release> releases_from_json(std::string_view json);

/// Immutable snapshot of one node's served catalog.
struct Catalog {
    std::map<std::string, Release> entries;
    std::uint64_t seq{};

    /// Current entries with published_seq > since and a matching category, ordered by published_seq.
    [[nodiscard]] std::vector<Release> since(const CategorySet& categories, std::uint64_t since_seq) const;
};

/// Content-addressed files at `<root>/<first 2 hex>/<hex>.amb`.
class BlobStore {
public:
    explicit BlobStore(std::filesystem::path root);

    [[nodiscard]] std::filesystem::path path_for(const Digest& d) const;
    [[nodiscard]] bool contains(const Digest& d) const;
    /// Bytes whose SHA-256 equals `d`; nullopt when absent or failing verification.
    [[nodiscard]] std::optional<Bytes> get(const Digest& d) const;
    /// Atomic write; returns the digest. Throws StorageFailure.
    Digest put(ByteView bytes);
    void remove(const Digest& d);
    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::filesystem::path root_;
};

struct HeldApp {
    std::uint32_t version{};
    Digest digest;
    std::string category;
    std::string title;
    std::uint64_t size{};
    std::uint64_t local_seq{};  // published_seq assigned by this node

    friend bool operator==(const HeldApp&, const HeldApp&) = default;
};

/// Persistent per-node record (state.json).
struct SyncState {
    std::string node_id;
    Role role{Role::kiosk};
    CategorySet categories;
    std::map<std::string, HeldApp> held;
    std::uint64_t seq{};             // highest published_seq this node has assigned
    std::uint64_t last_seq_seen{};   // cursor into the upstream catalog
    std::optional<std::string> auto_broadcast;

    friend bool operator==(const SyncState&, const SyncState&) = default;
};

std::string state_to_json(const SyncState& s);
SyncState state_from_json(std::string_view json);

struct NodeConfig {
    std::string node_id;
    Role role{Role::kiosk};
    std::string listen{"127.0.0.1:0"};
    std::string upstream_url;
    CategorySet categories;
    std::filesystem::path store_dir;
    std::string token;            // bearer token; empty disables the check
    double sync_interval_s{5.0};  // serve: period of the in-process sync agent
};

/// Parses node.json. Relative store_dir is resolved against `base_dir`.
NodeConfig parse_node_config(std::string_view json, const std::filesystem::path& base_dir);
NodeConfig load_node_config(const std::filesystem::path& file);

struct MenuEntry {
    std::string app_id;
    std::string title;
    std::uint32_t version{};
    std::uint64_t size{};

    friend bool operator==(const MenuEntry&, const MenuEntry&) = default;
};

struct Health {
    Role role{};
    std::uint64_t seq{};
    std::size_t held_count{};
};

/// One distribution node: blob store, persisted SyncState and the catalog derived from it.
/// Readers take lock-free-to-them snapshots; writers are serialized.
class Node {
public:
    /// Opens (or initializes) the node rooted at `store_dir`; drops held entries whose blob fails verification.
    Node(std::string node_id, Role role, CategorySet categories, std::filesystem::path store_dir);
    explicit Node(const NodeConfig& config);

    [[nodiscard]] std::shared_ptr<const SyncState> state() const;
    [[nodiscard]] std::shared_ptr<const Catalog> catalog() const;
    [[nodiscard]] Health health() const;
    [[nodiscard]] const BlobStore& store() const noexcept { return store_; }
    [[nodiscard]] Role role() const noexcept { return role_; }
    [[nodiscard]] const std::filesystem::path& state_path() const noexcept { return state_path_; }

    /// Bundle bytes for a digest held by this node (verified); nullopt otherwise.
    [[nodiscard]] std::optional<Bytes> blob(const Digest& d) const;

    Release publish(const std::string& app_id, std::uint32_t version, const std::string& category, ByteView bundle_bytes,
                    std::optional<Digest> claimed_digest = std::nullopt);

    /// Installs a verified release fetched from upstream. Returns false when already held at >= version.
    bool install(const Release& upstream, ByteView bundle_bytes);
    void set_cursor(std::uint64_t seq);

    SyncState mark_auto_broadcast(const std::string& app_id, bool enabled);

    /// Held by sync_once for its whole run; one sync agent per node.
    std::mutex& sync_mutex() noexcept { return sync_mutex_; }

private:
    void commit(std::shared_ptr<SyncState> next);
    Release install_locked(SyncState& next, const std::string& app_id, std::uint32_t version, const std::string& category,
                           ByteView bytes, const Digest& digest);

    Role role_;
    BlobStore store_;
    std::filesystem::path state_path_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const SyncState> state_;
    std::shared_ptr<const Catalog> catalog_;
    std::mutex write_mutex_;
    std::mutex sync_mutex_;
};

/// Where a node pulls from.
class Upstream {
public:
    virtual ~Upstream() = default;
    /// Throws UpstreamUnreachable.
    virtual std::vector<Release> fetch_catalog(const CategorySet& categories, std::uint64_t since_seq) = 0;
    /// nullopt when the upstream does not have the blob. Throws UpstreamUnreachable.
    virtual std::optional<Bytes> fetch_blob(const Digest& digest) = 0;
};

/// In-process upstream reading another Node directly.
class LocalUpstream final : public Upstream {
public:
    explicit LocalUpstream(const Node& node) : node_(node) {}
    std::vector<Release> fetch_catalog(const CategorySet& categories, std::uint64_t since_seq) override;
    std::optional<Bytes> fetch_blob(const Digest& digest) override;

private:
    const Node& node_;
};

/// HTTP/1.1 client for the /v1 wire protocol.
class HttpUpstream final : public Upstream {
public:
    explicit HttpUpstream(std::string base_url, std::string token = {}, double timeout_s = 5.0);
    std::vector<Release> fetch_catalog(const CategorySet& categories, std::uint64_t since_seq) override;
    std::optional<Bytes> fetch_blob(const Digest& digest) override;

private:
    std::string base_url_;
    std::string token_;
    double timeout_s_;
};

std::vector<Release> fetch_catalog(Upstream& upstream, const CategorySet& categories, std::uint64_t since_seq);

struct SyncReport {
    std::size_t downloaded{};
    std::size_t skipped{};
    std::size_t failed{};

    friend bool operator==(const SyncReport&, const SyncReport&) = default;
};

/// One pull round. Cursor advances only over the contiguous prefix of installed or skipped entries.
/// Throws UpstreamUnreachable after persisting whatever was installed before the failure.
SyncReport sync_once(Node& local, Upstream& upstream);

/// Held apps sorted by title (then app_id).
std::vector<MenuEntry> kiosk_menu(const Node& node);

/// POST /v1/releases against a central node. Throws DistError mapped from the response.
Release publish_remote(const std::string& base_url, const std::string& token, const std::string& app_id,
                       std::uint32_t version, const std::string& category, ByteView bundle_bytes);

/// GET /v1/health of a node.
Health fetch_health(const std::string& base_url, const std::string& token = {}, double timeout_s = 2.0);

/// Splits "host:port" (port may be 0).
std::pair<std::string, int> split_listen(const std::string& listen);

/// HTTP server for one node. Runs on a background thread until stop() or destruction.
class NodeServer {
public:
    NodeServer(Node& node, std::string token = {});
    ~NodeServer();
    NodeServer(const NodeServer&) = delete;
    NodeServer& operator=(const NodeServer&) = delete;

    /// Binds and starts serving; returns the bound port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();
    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] std::string url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_{0};
};

} // namespace mcms::dist
