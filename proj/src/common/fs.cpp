#include "mcms/fs.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <system_error>

#include <fcntl.h>
#include <unistd.h>

namespace mcms::fs {

std::optional<Bytes> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    Bytes out{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) return std::nullopt;
    return out;
}

void write_file_atomic(const std::filesystem::path& path, ByteView data) {
    static std::atomic<unsigned> counter{0};
    const auto parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::filesystem::create_directories(parent);
    const auto tmp = parent / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
                               std::to_string(counter++));
    const auto fail = [&](int err) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw std::filesystem::filesystem_error("atomic write failed", path, std::error_code(err, std::generic_category()));
    };
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) fail(errno);
    std::size_t done = 0;
    while (done < data.size()) {
        const ::ssize_t n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int err = errno;
            ::close(fd);
            fail(err);
        }
        done += static_cast<std::size_t>(n);
    }
    const int sync_err = ::fsync(fd) == 0 ? 0 : errno;
    if (::close(fd) != 0 && sync_err == 0) fail(errno);
    if (sync_err != 0) fail(sync_err);
    if (std::rename(tmp.c_str(), path.c_str()) != 0) fail(errno);
}

} // namespace mcms::fs
