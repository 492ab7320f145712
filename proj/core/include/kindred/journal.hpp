#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kindred/domain.hpp"

namespace kindred {

enum class RecordKind {
    user_msg,
    agent_msg,
    round_closed,
    event_detected,
    entry_enqueued,
    entry_dispatched,
    entry_skipped,
    entry_expired,
    suppression_set,
    suppression_cleared,
    reflection_done,
    schedule_initialized,
    day_rolled_over,
    message_rated,
};

std::string_view to_string(RecordKind k);
RecordKind record_kind_from_string(std::string_view s);

struct JournalRecord {
    std::uint64_t seq = 0;
    Timestamp at;
    RecordKind kind = RecordKind::user_msg;
    Json payload = Json::object();

    bool operator==(const JournalRecord&) const = default;
};

void to_json(Json& j, const JournalRecord& r);
void from_json(const Json& j, JournalRecord& r);

// One record per line, keys sorted, no trailing whitespace.
std::string serialize_record(const JournalRecord& r);

struct LoadedJournal {
    std::vector<JournalRecord> records;
    // Byte length of the intact prefix; anything past it was a torn write.
    std::uintmax_t valid_bytes = 0;
    bool had_torn_tail = false;
    // The last record is complete but its newline never made it to disk.
    bool missing_newline = false;
};

// Append-only record log. Every record is also kept in memory so streams and
// replay can read it back without touching the file.
class Journal {
public:
    virtual ~Journal() = default;

    // Rejects any record whose seq is not last_seq() + 1.
    void append(const JournalRecord& r);
    // Makes everything appended so far durable.
    virtual void flush() {}

    std::uint64_t last_seq() const { return records_.empty() ? 0 : records_.back().seq; }
    const std::vector<JournalRecord>& records() const { return records_; }
    std::vector<JournalRecord> after(std::uint64_t seq) const;

protected:
    explicit Journal(std::vector<JournalRecord> existing = {});
    virtual void write(const JournalRecord& r) = 0;

private:
    std::vector<JournalRecord> records_;
};

class MemoryJournal final : public Journal {
public:
    explicit MemoryJournal(std::vector<JournalRecord> existing = {})
        : Journal(std::move(existing)) {}

protected:
    void write(const JournalRecord&) override {}
};

// JSONL file. Lines are buffered by stdio and forced to disk with fsync on
// flush(), so one flush covers a batch.
class FileJournal final : public Journal {
public:
    // Opens (creating if needed) and loads the file; see load_journal.
    explicit FileJournal(std::filesystem::path path);
    ~FileJournal() override;
    FileJournal(const FileJournal&) = delete;
    FileJournal& operator=(const FileJournal&) = delete;

    void flush() override;
    const std::filesystem::path& path() const { return path_; }

protected:
    void write(const JournalRecord& r) override;

private:
    FileJournal(std::filesystem::path path, LoadedJournal loaded);

    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
};


// Reads a journal file. An unterminated final line that does not parse is a
// torn write and is dropped; any other unreadable line, or a seq gap, throws
// CorruptJournal with the 1-based line number. A missing file is empty.
LoadedJournal load_journal(const std::filesystem::path& path);

}  // namespace kindred
