#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "fixtures.hpp"
#include "fieldbabel/error.hpp"
#include "fieldbabel/jobs.hpp"
#include "fieldbabel/journal.hpp"

using namespace fbtest;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::io_error;
}

AOIRequest request(const std::string& id, int minute = 0) {
    AOIRequest r;
    r.request_id = id;
    r.email = "farmer@example.dk";
    r.polygon = rect(10.4, 55.1, 10.45, 55.12);
    r.crop = "Winter wheat";
    r.year = 2017;
    r.created_at = parse_timestamp(fmt::format("2020-01-01T00:{:02d}:00Z", minute));
    return r;
}

void append_raw(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::app | std::ios::binary);
    out << bytes;
}

}  // namespace

TEST(Journal, AppendAndReadFromOffset) {
    TempDir dir;
    const auto p = dir / "j.jsonl";
    EXPECT_TRUE(read_journal(p).lines.empty());
    Journal j(p);
    j.append("one");
    j.append("two");
    auto all = read_journal(p);
    EXPECT_EQ(all.lines, (std::vector<std::string>{"one", "two"}));
    EXPECT_EQ(all.next_offset, 8u);
    j.append("three");
    const auto rest = read_journal(p, all.next_offset);
    EXPECT_EQ(rest.lines, (std::vector<std::string>{"three"}));
    EXPECT_EQ(code_of([&] { j.append("a\nb"); }), ErrorCode::invalid_argument);
}

TEST(Journal, TornTailSkippedThenTruncated) {
    TempDir dir;
    const auto p = dir / "j.jsonl";
    {
        Journal j(p);
        j.append("one");
    }
    append_raw(p, "tor");
    auto chunk = read_journal(p);
    EXPECT_EQ(chunk.lines, (std::vector<std::string>{"one"}));
    EXPECT_EQ(chunk.next_offset, 4u);
    Journal j(p);
    j.append("two");
    EXPECT_EQ(slurp(p), "one\ntwo\n");
}

TEST(Journal, ConcurrentProcessesInterleaveWholeLines) {
    TempDir dir;
    const auto p = dir / "j.jsonl";
    constexpr int kProcs = 4, kLines = 200;
    std::vector<pid_t> kids;
    for (int k = 0; k < kProcs; ++k) {
        const pid_t pid = ::fork();
        ASSERT_GE(pid, 0);
        if (pid == 0) {
            int rc = 0;
            try {
                Journal j(p);
                for (int i = 0; i < kLines; ++i) j.append(fmt::format("{}:{}:{}", k, i, std::string(100 + i % 50, 'x')));
            } catch (...) {
                rc = 1;
            }
            ::_exit(rc);
        }
        kids.push_back(pid);
    }
    for (pid_t pid : kids) {
        int status = 0;
        ::waitpid(pid, &status, 0);
        EXPECT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0);
    }
    const auto lines = read_journal(p).lines;
    ASSERT_EQ(lines.size(), static_cast<std::size_t>(kProcs * kLines));
    std::set<std::string> keys;
    for (const auto& l : lines) {
        const auto a = l.find(':'), b = l.find(':', a + 1);
        const int i = std::stoi(l.substr(a + 1, b - a - 1));
        EXPECT_EQ(l.size() - b - 1, static_cast<std::size_t>(100 + i % 50));
        keys.insert(l.substr(0, b));
    }
    EXPECT_EQ(keys.size(), lines.size());
}

TEST(FileLockTest, ExcludesOtherProcesses) {
    TempDir dir;
    const auto lockp = dir / "x.lock";
    const auto marker = dir / "order";
    int pipefd[2];
    ASSERT_EQ(::pipe(pipefd), 0);
    const pid_t pid = ::fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        ::close(pipefd[0]);
        {
            FileLock l(lockp);
            (void)!::write(pipefd[1], "g", 1);
            ::usleep(200000);
            append_raw(marker, "child\n");
        }
        ::_exit(0);
    }
    ::close(pipefd[1]);
    char c;
    ASSERT_EQ(::read(pipefd[0], &c, 1), 1);
    {
        FileLock l(lockp);
        append_raw(marker, "parent\n");
    }
    ::waitpid(pid, nullptr, 0);
    ::close(pipefd[0]);
    EXPECT_EQ(slurp(marker), "child\nparent\n");
}

TEST(RequestJson, RoundTrip) {
    auto r = request("abc");
    r.status = JobStatus::done;
    r.message = "ok";
    r.bundle_path = "bundles/abc.zip";
    r.scene_count = 3;
    r.notification = "To: farmer@example.dk";
    r.ratio_mode = RatioMode::db_difference;
    EXPECT_EQ(parse_request_json(request_json(r)), r);
    EXPECT_EQ(parse_request_json(request_json(request("x"))), request("x"));
    EXPECT_EQ(parse_job_status("processing"), JobStatus::processing);
    EXPECT_EQ(code_of([] { parse_job_status("stuck"); }), ErrorCode::invalid_argument);
}

TEST(JobStoreTest, LifecycleAndConflicts) {
    TempDir dir;
    JobStore store(dir.path());
    store.submit(request("a", 1));
    store.submit(request("b", 2));
    EXPECT_EQ(code_of([&] { store.submit(request("a")); }), ErrorCode::conflict);
    auto bad = request("c");
    bad.status = JobStatus::done;
    EXPECT_EQ(code_of([&] { store.submit(bad); }), ErrorCode::invalid_argument);

    EXPECT_EQ(code_of([&] { store.finish("a", JobStatus::done, std::nullopt, "x.zip", 1); }), ErrorCode::conflict);
    EXPECT_EQ(code_of([&] { store.finish("zzz", JobStatus::failed, "no", std::nullopt, 0); }), ErrorCode::not_found);
    EXPECT_EQ(code_of([&] { store.record_notification("a", "n"); }), ErrorCode::conflict);

    auto claimed = store.claim_next();
    ASSERT_TRUE(claimed);
    EXPECT_EQ(claimed->request_id, "a");
    EXPECT_EQ(claimed->status, JobStatus::processing);
    EXPECT_EQ(code_of([&] { store.finish("a", JobStatus::done, std::nullopt, std::nullopt, 1); }), ErrorCode::invalid_argument);
    EXPECT_EQ(code_of([&] { store.finish("a", JobStatus::pending, std::nullopt, std::nullopt, 1); }), ErrorCode::invalid_argument);
    const auto done = store.finish("a", JobStatus::done, std::nullopt, "bundles/a.zip", 4);
    EXPECT_EQ(done.status, JobStatus::done);
    EXPECT_EQ(done.scene_count, 4);
    EXPECT_EQ(code_of([&] { store.finish("a", JobStatus::failed, "late", std::nullopt, 0); }), ErrorCode::conflict);
    store.record_notification("a", "mail");
    EXPECT_EQ(store.get("a")->notification, "mail");

    EXPECT_EQ(store.claim_next()->request_id, "b");
    EXPECT_FALSE(store.claim_next());
    store.finish("b", JobStatus::failed, "boom", std::nullopt, 0);
    EXPECT_EQ(store.get("b")->message, "boom");
    EXPECT_FALSE(store.get("nope"));

    const auto all = store.all();
    ASSERT_EQ(all.size(), 2u);
    EXPECT_EQ(all[0].request_id, "a");
    EXPECT_EQ(all[1].status, JobStatus::failed);
}

TEST(JobStoreTest, ReplayRecoverAndTornTail) {
    TempDir dir;
    {
        JobStore s(dir.path());
        s.submit(request("a"));
        s.submit(request("b"));
        s.submit(request("c"));
        s.claim_next();
        s.claim_next();
        s.finish("b", JobStatus::failed, "x", std::nullopt, 0);
    }
    append_raw(dir / "jobs.jsonl", R"({"request_id":"d","ema)");
    JobStore s(dir.path());
    EXPECT_EQ(s.get("a")->status, JobStatus::processing);
    EXPECT_FALSE(s.get("d"));
    EXPECT_EQ(s.recover(), 1);
    EXPECT_EQ(s.get("a")->status, JobStatus::pending);
    EXPECT_EQ(s.get("b")->status, JobStatus::failed);
    EXPECT_EQ(s.recover(), 0);
    // oldest pending first
    EXPECT_EQ(s.claim_next()->request_id, "a");
    EXPECT_EQ(s.claim_next()->request_id, "c");

    // every line after the torn one still parses
    std::size_t n = 0;
    for (const auto& line : read_journal(s.journal_path()).lines) {
        EXPECT_NO_THROW(parse_request_json(line));
        ++n;
    }
    EXPECT_EQ(n, 9u);
}

TEST(JobStoreTest, UnparsableLinesAreCounted) {
    TempDir dir;
    {
        JobStore s(dir.path());
        s.submit(request("a"));
    }
    append_raw(dir / "jobs.jsonl", "not json\n");
    JobStore s(dir.path());
    s.submit(request("b"));
    EXPECT_EQ(s.skipped_lines(), 1u);
    EXPECT_EQ(s.all().size(), 2u);
}

TEST(JobStoreTest, TwoStoresShareOneJournal) {
    TempDir dir;
    JobStore a(dir.path()), b(dir.path());
    a.submit(request("x"));
    EXPECT_EQ(code_of([&] { b.submit(request("x")); }), ErrorCode::conflict);
    EXPECT_EQ(b.claim_next()->request_id, "x");
    EXPECT_FALSE(a.claim_next());
    EXPECT_EQ(a.get("x")->status, JobStatus::processing);
}
