#include "kindred/journal.hpp"

#include <array>
#include <fstream>
#include <utility>

#include <fcntl.h>
#include <unistd.h>

#include "kindred/errors.hpp"

namespace kindred {

namespace {

constexpr std::array<std::pair<RecordKind, std::string_view>, 14> kKinds{{
    {RecordKind::user_msg, "user_msg"},
    {RecordKind::agent_msg, "agent_msg"},
    {RecordKind::round_closed, "round_closed"},
    {RecordKind::event_detected, "event_detected"},
    {RecordKind::entry_enqueued, "entry_enqueued"},
    {RecordKind::entry_dispatched, "entry_dispatched"},
    {RecordKind::entry_skipped, "entry_skipped"},
    {RecordKind::entry_expired, "entry_expired"},
    {RecordKind::suppression_set, "suppression_set"},
    {RecordKind::suppression_cleared, "suppression_cleared"},
    {RecordKind::reflection_done, "reflection_done"},
    {RecordKind::schedule_initialized, "schedule_initialized"},
    {RecordKind::day_rolled_over, "day_rolled_over"},
    {RecordKind::message_rated, "message_rated"},
}};

}  // namespace

std::string_view to_string(RecordKind k) {
    for (const auto& [v, name] : kKinds) {
        if (v == k) return name;
    }
    return "?";
}

RecordKind record_kind_from_string(std::string_view s) {
    for (const auto& [v, name] : kKinds) {
        if (name == s) return v;
    }
    throw ParseError("unknown record kind '" + std::string(s) + "'");
}

void to_json(Json& j, const JournalRecord& r) {
    j = Json{{"seq", r.seq},
             {"at", format_timestamp(r.at)},
             {"kind", to_string(r.kind)},
             {"payload", r.payload}};
}

void from_json(const Json& j, JournalRecord& r) {
    if (!j.is_object()) throw ParseError("record is not an object");
    for (const char* key : {"seq", "at", "kind", "payload"}) {
        if (!j.contains(key)) throw ParseError(std::string("record lacks '") + key + "'");
    }
    r.seq = j.at("seq").get<std::uint64_t>();
    r.at = parse_timestamp(j.at("at").get<std::string>());
    r.kind = record_kind_from_string(j.at("kind").get<std::string>());
    r.payload = j.at("payload");
}

std::string serialize_record(const JournalRecord& r) { return Json(r).dump(); }

// ---------------------------------------------------------------------------

Journal::Journal(std::vector<JournalRecord> existing) : records_(std::move(existing)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].seq != i + 1) {
            throw SequenceError("journal records must be numbered 1..n");
        }
    }
}

void Journal::append(const JournalRecord& r) {
    if (r.seq != last_seq() + 1) {
        throw SequenceError("append seq " + std::to_string(r.seq) + " after " +
                            std::to_string(last_seq()));
    }
    write(r);
    records_.push_back(r);
}

std::vector<JournalRecord> Journal::after(std::uint64_t seq) const {
    if (seq >= records_.size()) return {};
    return {records_.begin() + static_cast<std::ptrdiff_t>(seq), records_.end()};
}

// ---------------------------------------------------------------------------

LoadedJournal load_journal(const std::filesystem::path& path) {
    LoadedJournal out;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!std::filesystem::exists(path)) return out;
        throw IoError("cannot open " + path.string());
    }
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < data.size()) {
        ++line_no;
        const std::size_t nl = data.find('\n', pos);
        const bool terminated = nl != std::string::npos;
        const std::string_view line(data.data() + pos, (terminated ? nl : data.size()) - pos);
        JournalRecord r;
        try {
            r = Json::parse(line).get<JournalRecord>();
        } catch (const std::exception& e) {
            if (!terminated) {
                out.had_torn_tail = true;
                break;
            }
            throw CorruptJournal(line_no, e.what());
        }
        if (r.seq != out.records.size() + 1) {
            throw CorruptJournal(line_no, "expected seq " + std::to_string(out.records.size() + 1) +
                                              ", found " + std::to_string(r.seq));
        }
        out.records.push_back(std::move(r));
        pos = terminated ? nl + 1 : data.size();
        out.valid_bytes = pos;
        out.missing_newline = !terminated;
    }
    return out;
}

FileJournal::FileJournal(std::filesystem::path path)
    : FileJournal(path, load_journal(path)) {}

FileJournal::FileJournal(std::filesystem::path path, LoadedJournal loaded)
    : Journal(std::move(loaded.records)), path_(std::move(path)) {
    if (loaded.had_torn_tail) {
        std::error_code ec;
        std::filesystem::resize_file(path_, loaded.valid_bytes, ec);
        if (ec) throw IoError("cannot truncate " + path_.string() + ": " + ec.message());
    }
    file_ = std::fopen(path_.c_str(), "ab");
    if (file_ == nullptr) throw IoError("cannot open " + path_.string() + " for append");
    if (loaded.missing_newline) std::fputc('\n', file_);
}

FileJournal::~FileJournal() {
    if (file_ != nullptr) {
        std::fflush(file_);
        ::fsync(::fileno(file_));
        std::fclose(file_);
    }
}

void FileJournal::write(const JournalRecord& r) {
    const std::string line = serialize_record(r) + '\n';
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size()) {
        throw IoError("write to " + path_.string() + " failed");
    }
}

void FileJournal::flush() {
    if (std::fflush(file_) != 0 || ::fsync(::fileno(file_)) != 0) {
        throw IoError("flush of " + path_.string() + " failed");
    }
}

}  // namespace kindred
