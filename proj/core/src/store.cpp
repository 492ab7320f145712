#include "kindred/store.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "kindred/errors.hpp"

namespace kindred {

namespace fs = std::filesystem;

LongTermWriter::LongTermWriter(const fs::path& path) : path_(path) {
    file_ = std::fopen(path_.c_str(), "ab");
    if (file_ == nullptr) throw IoError("cannot open " + path_.string() + " for append");
}

LongTermWriter::~LongTermWriter() {
    if (file_ != nullptr) std::fclose(file_);
}

void LongTermWriter::append(const MemoryObject& o) {
    const std::string line = Json(o).dump() + '\n';
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0 ||
        ::fsync(::fileno(file_)) != 0) {
        throw IoError("write to " + path_.string() + " failed");
    }
}

std::vector<MemoryObject> load_long_term(const fs::path& path, bool repair) {
    std::vector<MemoryObject> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!fs::exists(path)) return out;
        throw IoError("cannot open " + path.string());
    }
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    std::size_t line_no = 0;
    std::uintmax_t valid = 0;
    bool torn = false;
    while (pos < data.size()) {
        ++line_no;
        const std::size_t nl = data.find('\n', pos);
        const bool terminated = nl != std::string::npos;
        const std::string_view line(data.data() + pos, (terminated ? nl : data.size()) - pos);
        try {
            auto o = Json::parse(line).get<MemoryObject>();
            if (!o.embedding) throw ParseError("memory object has no embedding");
            out.push_back(std::move(o));
        } catch (const std::exception& e) {
            if (!terminated) {
                torn = true;
                break;
            }
            throw CorruptJournal(line_no, std::string(path.filename()) + ": " + e.what());
        }
        if (!terminated) {
            torn = true;  // complete object; the rewrite below restores its newline
            valid = data.size();
            break;
        }
        pos = nl + 1;
        valid = pos;
    }
    if (torn && repair) {
        fs::resize_file(path, valid);
        if (valid == data.size()) {
            std::ofstream(path, std::ios::app | std::ios::binary) << '\n';
        }
    }
    return out;
}

void write_json_file(const fs::path& path, const Json& j) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << j.dump(2) << '\n';
        if (!out) throw IoError("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

Json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return Json::parse(ss.str());
    } catch (const Json::exception& e) {
        throw ParseError(path.filename().string() + ": " + e.what());
    }
}

AgentHandle open_agent(const fs::path& dir, Provider& provider,
                       const std::optional<Persona>& persona,
                       const std::optional<AgentConfig>& config,
                       const std::vector<WorldInfo>& world_overrides) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    Persona p;
    if (fs::exists(dir / kPersonaFile)) {
        p = read_json_file(dir / kPersonaFile).get<Persona>();
    } else if (persona) {
        p = validate_persona(*persona);
        write_json_file(dir / kPersonaFile, p);
    } else {
        throw ValidationError("persona", "no persona.json in " + dir.string());
    }

    AgentConfig c;
    if (fs::exists(dir / kConfigFile)) {
        c = read_json_file(dir / kConfigFile).get<AgentConfig>();
    } else {
        c = validate_agent_config(config.value_or(AgentConfig{}));
        write_json_file(dir / kConfigFile, c);
    }

    AgentHandle h;
    h.dir = dir;
    h.world = std::make_unique<FixedWorldInfo>(c.weather, c.temp_low, c.temp_high);
    for (const auto& w : world_overrides) h.world->set_override(w);

    auto journal = std::make_unique<FileJournal>(dir / kJournalFile);
    auto long_term = load_long_term(dir / kLongTermFile);
    h.long_term = std::make_unique<LongTermWriter>(dir / kLongTermFile);
    LongTermSink sink = [w = h.long_term.get()](const MemoryObject& o) { w->append(o); };

    if (journal->records().empty()) {
        if (!long_term.empty()) {
            throw CorruptJournal(0, "long-term memory present but the journal is empty");
        }
        h.agent = std::make_unique<Agent>(std::move(p), std::move(c), provider, *h.world,
                                          std::move(journal), std::move(sink));
    } else {
        h.agent = Agent::replay(std::move(p), std::move(c), provider, *h.world, std::move(journal),
                                std::move(long_term), std::move(sink));
    }
    return h;
}

}  // namespace kindred
