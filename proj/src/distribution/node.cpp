#include "mcms/distribution.hpp"

#include "mcms/bundle_codec.hpp"
#include "mcms/fs.hpp"

#include <algorithm>
#include <tuple>

namespace mcms::dist {

// -- blob store ----------------------------------------------------------------

BlobStore::BlobStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path BlobStore::path_for(const Digest& d) const {
    const std::string hex = d.hex();
    return root_ / hex.substr(0, 2) / (hex + ".amb");
}

bool BlobStore::contains(const Digest& d) const { return get(d).has_value(); }

std::optional<Bytes> BlobStore::get(const Digest& d) const {
    auto bytes = fs::read_file(path_for(d));
    if (!bytes || sha256(*bytes) != d) return std::nullopt;
    return bytes;
}

Digest BlobStore::put(ByteView bytes) {
    const Digest d = sha256(bytes);
    try {
        if (!contains(d)) fs::write_file_atomic(path_for(d), bytes);
    } catch (const std::filesystem::filesystem_error& e) {
        throw DistError(DistErrc::StorageFailure, e.what());
    }
    return d;
}

void BlobStore::remove(const Digest& d) {
    std::error_code ec;
    std::filesystem::remove(path_for(d), ec);
}

// -- node ----------------------------------------------------------------------

namespace {

std::shared_ptr<const Catalog> catalog_of(const SyncState& s) {
    auto c = std::make_shared<Catalog>();
    c->seq = s.seq;
    for (const auto& [id, h] : s.held) c->entries.emplace(id, Release{id, h.version, h.category, h.digest, h.size, h.local_seq});
    return c;
}

} // namespace

Node::Node(std::string node_id, Role role, CategorySet categories, std::filesystem::path store_dir)
    : role_(role), store_(store_dir / "store"), state_path_(store_dir / "state.json") {
    auto s = std::make_shared<SyncState>();
    if (const auto text = fs::read_file(state_path_)) {
        *s = state_from_json(as_string(*text));
        // every held digest must verify against the local store
        bool dropped = false;
        for (auto it = s->held.begin(); it != s->held.end();) {
            if (store_.contains(it->second.digest)) {
                ++it;
            } else {
                it = s->held.erase(it);
                dropped = true;
            }
        }
        if (dropped) s->last_seq_seen = 0;
        if (s->auto_broadcast && !s->held.count(*s->auto_broadcast)) s->auto_broadcast.reset();
    }
    s->node_id = std::move(node_id);
    s->role = role;
    s->categories = std::move(categories);
    commit(std::move(s));
}

Node::Node(const NodeConfig& config) : Node(config.node_id, config.role, config.categories, config.store_dir) {}

std::shared_ptr<const SyncState> Node::state() const {
    std::lock_guard lock(snapshot_mutex_);
    return state_;
}

std::shared_ptr<const Catalog> Node::catalog() const {
    std::lock_guard lock(snapshot_mutex_);
    return catalog_;
}

Health Node::health() const {
    const auto s = state();
    return {s->role, s->seq, s->held.size()};
}

std::optional<Bytes> Node::blob(const Digest& d) const {
    const auto s = state();
    const bool held = std::any_of(s->held.begin(), s->held.end(), [&](const auto& kv) { return kv.second.digest == d; });
    if (!held) return std::nullopt;
    return store_.get(d);
}

void Node::commit(std::shared_ptr<SyncState> next) {
    const std::string text = state_to_json(*next);
    try {
        fs::write_file_atomic(state_path_, as_bytes(text));
    } catch (const std::filesystem::filesystem_error& e) {
        throw DistError(DistErrc::StorageFailure, e.what());
    }
    auto cat = catalog_of(*next);
    std::lock_guard lock(snapshot_mutex_);
    state_ = std::move(next);
    catalog_ = std::move(cat);
}

Release Node::install_locked(SyncState& next, const std::string& app_id, std::uint32_t version,
                             const std::string& category, ByteView bytes, const Digest& digest) {
    bundle::Bundle parsed;
    try {
        parsed = bundle::parse(bytes);
    } catch (const bundle::BundleError& e) {
        throw DistError(DistErrc::MalformedBundle, e.what());
    }
    if (parsed.meta.app_id != app_id || parsed.meta.version != version || parsed.meta.category != category) {
        throw DistError(DistErrc::MalformedBundle, "release fields do not match bundle META");
    }
    if (store_.put(bytes) != digest) throw DistError(DistErrc::DigestMismatch, app_id);
    const std::uint64_t seq = ++next.seq;
    next.held[app_id] = HeldApp{version, digest, category, parsed.meta.title, bytes.size(), seq};
    return Release{app_id, version, category, digest, bytes.size(), seq};
}

Release Node::publish(const std::string& app_id, std::uint32_t version, const std::string& category, ByteView bundle_bytes,
                      std::optional<Digest> claimed_digest) {
    std::lock_guard lock(write_mutex_);
    const Digest digest = sha256(bundle_bytes);
    if (claimed_digest && *claimed_digest != digest) {
        throw DistError(DistErrc::MalformedBundle, "uploaded bytes do not match the claimed digest");
    }
    auto next = std::make_shared<SyncState>(*state());
    const auto it = next->held.find(app_id);
    if (it != next->held.end() && version <= it->second.version) {
        throw DistError(DistErrc::VersionNotIncreased,
                        app_id + " holds v" + std::to_string(it->second.version) + ", got v" + std::to_string(version));
    }
    Release r = install_locked(*next, app_id, version, category, bundle_bytes, digest);
    commit(std::move(next));
    return r;
}

bool Node::install(const Release& upstream, ByteView bundle_bytes) {
    std::lock_guard lock(write_mutex_);
    if (sha256(bundle_bytes) != upstream.digest || bundle_bytes.size() != upstream.size) {
        throw DistError(DistErrc::DigestMismatch, upstream.app_id);
    }
    const auto before = state();
    const auto it = before->held.find(upstream.app_id);
    if (it != before->held.end() && it->second.version >= upstream.version) return false;
    std::optional<Digest> superseded;
    if (it != before->held.end()) superseded = it->second.digest;

    auto next = std::make_shared<SyncState>(*before);
    install_locked(*next, upstream.app_id, upstream.version, upstream.category, bundle_bytes, upstream.digest);
    commit(next);
    // old blob goes only after the new one is installed; the central keeps history
    if (superseded && role_ != Role::central) {
        const bool still_used =
            std::any_of(next->held.begin(), next->held.end(), [&](const auto& kv) { return kv.second.digest == *superseded; });
        if (!still_used) store_.remove(*superseded);
    }
    return true;
}

void Node::set_cursor(std::uint64_t seq) {
    std::lock_guard lock(write_mutex_);
    auto next = std::make_shared<SyncState>(*state());
    if (next->last_seq_seen == seq) return;
    next->last_seq_seen = seq;
    commit(std::move(next));
}

SyncState Node::mark_auto_broadcast(const std::string& app_id, bool enabled) {
    std::lock_guard lock(write_mutex_);
    auto next = std::make_shared<SyncState>(*state());
    if (enabled) {
        if (!next->held.count(app_id)) throw DistError(DistErrc::UnknownApp, app_id);
        next->auto_broadcast = app_id;
    } else if (next->auto_broadcast == app_id) {
        next->auto_broadcast.reset();
    } else {
        return *next;
    }
    commit(next);
    return *next;
}

// -- sync ----------------------------------------------------------------------

std::vector<Release> LocalUpstream::fetch_catalog(const CategorySet& categories, std::uint64_t since_seq) {
    return node_.catalog()->since(categories, since_seq);
}

std::optional<Bytes> LocalUpstream::fetch_blob(const Digest& digest) { return node_.blob(digest); }

std::vector<Release> fetch_catalog(Upstream& upstream, const CategorySet& categories, std::uint64_t since_seq) {
    return upstream.fetch_catalog(categories, since_seq);
}

SyncReport sync_once(Node& local, Upstream& upstream) {
    if (local.role() == Role::central) throw DistError(DistErrc::InvalidConfig, "the central node has no upstream");
    std::lock_guard agent(local.sync_mutex());
    const auto start = local.state();
    auto releases = upstream.fetch_catalog(start->categories, start->last_seq_seen);
    std::sort(releases.begin(), releases.end(),
              [](const Release& a, const Release& b) { return a.published_seq < b.published_seq; });

    SyncReport report;
    std::uint64_t cursor = start->last_seq_seen;
    bool contiguous = true;
    const auto settle = [&](const Release& r, bool ok) {
        if (!ok) contiguous = false;
        if (contiguous) cursor = std::max(cursor, r.published_seq);
    };
    for (const Release& r : releases) {
        if (!category_matches(start->categories, r.category)) continue;  // upstream ignored the filter
        const auto held = local.state()->held;
        if (const auto it = held.find(r.app_id); it != held.end() && it->second.version >= r.version) {
            ++report.skipped;
            settle(r, true);
            continue;
        }
        std::optional<Bytes> bytes;
        try {
            bytes = upstream.fetch_blob(r.digest);
        } catch (const DistError& e) {
            if (e.code() != DistErrc::UpstreamUnreachable) throw;
            local.set_cursor(cursor);
            throw;
        }
        if (!bytes) {
            ++report.failed;
            settle(r, false);
            continue;
        }
        try {
            if (local.install(r, *bytes)) ++report.downloaded;
            else ++report.skipped;
            settle(r, true);
        } catch (const DistError& e) {
            if (e.code() == DistErrc::StorageFailure) throw;
            ++report.failed;
            settle(r, false);
        }
    }
    local.set_cursor(cursor);
    return report;
}

std::vector<MenuEntry> kiosk_menu(const Node& node) {
    const auto s = node.state();
    std::vector<MenuEntry> out;
    for (const auto& [id, h] : s->held) out.push_back({id, h.title, h.version, h.size});
    std::sort(out.begin(), out.end(),
              [](const MenuEntry& a, const MenuEntry& b) { return std::tie(a.title, a.app_id) < std::tie(b.title, b.app_id); });
    return out;
}

} // namespace mcms::dist
