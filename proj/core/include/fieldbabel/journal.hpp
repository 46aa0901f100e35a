#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fieldbabel {

/// Append-only file of newline-terminated records. Each append is a single
/// locked write(2) followed by fsync, so a crash leaves at most one torn
/// record at the tail; readers skip it and the next append truncates it.
class Journal {
public:
    explicit Journal(std::filesystem::path path);
    ~Journal();
    Journal(const Journal&) = delete;
    Journal& operator=(const Journal&) = delete;

    /// `line` must not contain '\n'.
    void append(std::string_view line);

    const std::filesystem::path& path() const { return path_; }

private:
    void drop_torn_tail();

    std::filesystem::path path_;
    int fd_ = -1;
};

struct JournalChunk {
    std::vector<std::string> lines;
    std::uint64_t next_offset = 0;  // byte offset just past the last complete line
};

/// Complete lines starting at byte `offset`. A missing file reads as empty.
JournalChunk read_journal(const std::filesystem::path& path, std::uint64_t offset = 0);

/// Exclusive advisory lock on a file, released on destruction.
class FileLock {
public:
    explicit FileLock(const std::filesystem::path& path);
    ~FileLock();
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

/// fsync on a directory, so renames inside it are durable.
void sync_directory(const std::filesystem::path& dir);

}  // namespace fieldbabel
