#include "fieldbabel/journal.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fmt/format.h>

#include "fieldbabel/error.hpp"

namespace fieldbabel {

namespace {

[[noreturn]] void fail(const std::string& what, const std::filesystem::path& path) {
    throw Error(ErrorCode::io_error, fmt::format("{} {}: {}", what, path.string(), std::strerror(errno)));
}

}  // namespace

Journal::Journal(std::filesystem::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) fail("cannot open journal", path_);
}

Journal::~Journal() {
    if (fd_ >= 0) ::close(fd_);
}

void Journal::append(std::string_view line) {
    if (line.find('\n') != std::string_view::npos) {
        throw Error(ErrorCode::invalid_argument, "journal records must be single lines");
    }
    std::string buf(line);
    buf.push_back('\n');

    // Writers in other processes append to the same file.
    while (::flock(fd_, LOCK_EX) != 0) {
        if (errno != EINTR) fail("cannot lock journal", path_);
    }
    struct Unlock {
        int fd;
        ~Unlock() { ::flock(fd, LOCK_UN); }
    } unlock{fd_};

    drop_torn_tail();
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
        const ssize_t n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("cannot append to journal", path_);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) fail("cannot sync journal", path_);
}

void Journal::drop_torn_tail() {
    off_t end = ::lseek(fd_, 0, SEEK_END);
    const off_t size = end;
    char c = 0;
    while (end > 0) {
        if (::pread(fd_, &c, 1, end - 1) != 1) fail("cannot read journal", path_);
        if (c == '\n') break;
        --end;
    }
    if (end != size) {
        if (::ftruncate(fd_, end) != 0) fail("cannot truncate journal", path_);
        ::fsync(fd_);
    }
}

JournalChunk read_journal(const std::filesystem::path& path, std::uint64_t offset) {
    JournalChunk out;
    out.next_offset = offset;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    in.seekg(static_cast<std::streamoff>(offset));
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    std::size_t start = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i] != '\n') continue;
        if (i > start) out.lines.emplace_back(data, start, i - start);
        start = i + 1;
    }
    out.next_offset = offset + start;
    return out;
}

FileLock::FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) fail("cannot open lock file", path);
    while (::flock(fd_, LOCK_EX) != 0) {
        if (errno != EINTR) fail("cannot lock", path);
    }
}

FileLock::~FileLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

void sync_directory(const std::filesystem::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd < 0) fail("cannot open directory", dir);
    ::fsync(fd);
    ::close(fd);
}

}  // namespace fieldbabel
