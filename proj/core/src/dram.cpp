#include "axdram/dram.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "axdram/errors.hpp"

namespace axdram {

void DramGeometry::validate() const {
    const std::array<std::pair<const char*, std::uint32_t>, 8> fields{{
        {"n_ch", n_ch}, {"n_ra", n_ra}, {"n_cp", n_cp}, {"n_ba", n_ba},
        {"n_su", n_su}, {"n_ro", n_ro}, {"n_co", n_co}, {"word_bits", word_bits},
    }};
    for (const auto& [name, value] : fields) {
        if (value == 0) {
            throw ParameterError(std::string("geometry: ") + name + " must be >= 1");
        }
    }
}

std::uint64_t DramGeometry::bank_count() const noexcept {
    return std::uint64_t{n_ch} * n_ra * n_cp * n_ba;
}

std::uint64_t DramGeometry::words_per_bank() const noexcept {
    return std::uint64_t{n_su} * n_ro * n_co;
}

std::uint64_t DramGeometry::capacity_words() const noexcept {
    return bank_count() * words_per_bank();
}

std::uint64_t DramGeometry::bits_per_subarray() const noexcept {
    return std::uint64_t{n_ro} * n_co * word_bits;
}

bool is_valid(const DramAddress& a, const DramGeometry& g) noexcept {
    return a.ch < g.n_ch && a.ra < g.n_ra && a.cp < g.n_cp && a.ba < g.n_ba && a.su < g.n_su &&
           a.ro < g.n_ro && a.co < g.n_co;
}

void check_address(const DramAddress& a, const DramGeometry& g) {
    auto fail = [](const char* level, std::uint32_t idx, std::uint32_t count) {
        std::ostringstream os;
        os << "address: " << level << " index " << idx << " out of range [0, " << count << ")";
        throw AddressError(os.str());
    };
    if (a.ch >= g.n_ch) fail("channel", a.ch, g.n_ch);
    if (a.ra >= g.n_ra) fail("rank", a.ra, g.n_ra);
    if (a.cp >= g.n_cp) fail("chip", a.cp, g.n_cp);
    if (a.ba >= g.n_ba) fail("bank", a.ba, g.n_ba);
    if (a.su >= g.n_su) fail("subarray", a.su, g.n_su);
    if (a.ro >= g.n_ro) fail("row", a.ro, g.n_ro);
    if (a.co >= g.n_co) fail("column", a.co, g.n_co);
}

std::uint64_t linearize(const DramAddress& a, const DramGeometry& g) {
    check_address(a, g);
    std::uint64_t idx = a.ch;
    idx = idx * g.n_ra + a.ra;
    idx = idx * g.n_cp + a.cp;
    idx = idx * g.n_ro + a.ro;
    idx = idx * g.n_su + a.su;
    idx = idx * g.n_ba + a.ba;
    idx = idx * g.n_co + a.co;
    return idx;
}

DramAddress delinearize(std::uint64_t idx, const DramGeometry& g) {
    if (idx >= g.capacity_words()) {
        throw AddressError("address: word index " + std::to_string(idx) + " beyond capacity " +
                           std::to_string(g.capacity_words()));
    }
    DramAddress a;
    a.co = static_cast<std::uint32_t>(idx % g.n_co);
    idx /= g.n_co;
    a.ba = static_cast<std::uint32_t>(idx % g.n_ba);
    idx /= g.n_ba;
    a.su = static_cast<std::uint32_t>(idx % g.n_su);
    idx /= g.n_su;
    a.ro = static_cast<std::uint32_t>(idx % g.n_ro);
    idx /= g.n_ro;
    a.cp = static_cast<std::uint32_t>(idx % g.n_cp);
    idx /= g.n_cp;
    a.ra = static_cast<std::uint32_t>(idx % g.n_ra);
    idx /= g.n_ra;
    a.ch = static_cast<std::uint32_t>(idx);
    return a;
}

std::uint64_t bank_index(const DramAddress& a, const DramGeometry& g) noexcept {
    return ((std::uint64_t{a.ch} * g.n_ra + a.ra) * g.n_cp + a.cp) * g.n_ba + a.ba;
}

std::uint64_t subarray_index(const DramAddress& a, const DramGeometry& g) noexcept {
    return bank_index(a, g) * g.n_su + a.su;
}

std::string_view to_string(AccessCondition c) noexcept {
    switch (c) {
        case AccessCondition::Hit: return "hit";
        case AccessCondition::Miss: return "miss";
        case AccessCondition::Conflict: return "conflict";
    }
    return "?";
}

std::string_view to_string(Command c) noexcept {
    switch (c) {
        case Command::ACT: return "ACT";
        case Command::RD: return "RD";
        case Command::WR: return "WR";
        case Command::PRE: return "PRE";
    }
    return "?";
}

std::optional<AccessCondition> parse_condition(std::string_view s) noexcept {
    if (s == "hit") return AccessCondition::Hit;
    if (s == "miss") return AccessCondition::Miss;
    if (s == "conflict") return AccessCondition::Conflict;
    return std::nullopt;
}

std::optional<Command> parse_command(std::string_view s) noexcept {
    if (s == "ACT") return Command::ACT;
    if (s == "RD") return Command::RD;
    if (s == "WR") return Command::WR;
    if (s == "PRE") return Command::PRE;
    return std::nullopt;
}

// ---------------------------------------------------------------------------

RowBufferState::RowBufferState(const DramGeometry& geom) : geom_(geom) {
    geom_.validate();
    banks_.resize(geom_.bank_count());
}

std::optional<OpenRow> RowBufferState::open_row(const DramAddress& addr) const {
    check_address(addr, geom_);
    return banks_[bank_index(addr, geom_)];
}

void RowBufferState::open(const DramAddress& addr) {
    check_address(addr, geom_);
    banks_[bank_index(addr, geom_)] = OpenRow{addr.su, addr.ro};
}

void RowBufferState::close(const DramAddress& addr) {
    check_address(addr, geom_);
    banks_[bank_index(addr, geom_)].reset();
}

std::size_t RowBufferState::open_bank_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(banks_.begin(), banks_.end(), [](const auto& b) { return b.has_value(); }));
}

AccessCondition classify_access(const RowBufferState& state, const DramAddress& addr) {
    const auto open = state.open_row(addr);
    if (!open) return AccessCondition::Miss;
    if (open->su == addr.su && open->ro == addr.ro) return AccessCondition::Hit;
    return AccessCondition::Conflict;
}

CycleTiming CycleTiming::from(const TimingParams& t, const DeviceClock& clock) {
    if (!(clock.t_ck_ns > 0.0)) throw ParameterError("clock: t_ck_ns must be > 0");
    // Values already on the grid must not gain a cycle from rounding noise.
    auto cycles = [&](double ns) {
        return static_cast<std::uint32_t>(std::max(0.0, std::ceil(ns / clock.t_ck_ns - 1e-9)));
    };
    return CycleTiming{cycles(t.t_rcd_ns), cycles(t.t_ras_ns), cycles(t.t_rp_ns),
                       clock.cl_cycles, clock.burst_cycles};
}

AccessOutcome issue_access(RowBufferState& state, const DramAddress& addr, AccessKind kind,
                           const CycleTiming& timing) {
    AccessOutcome out;
    out.condition = classify_access(state, addr);
    const Command column = kind == AccessKind::Read ? Command::RD : Command::WR;
    switch (out.condition) {
        case AccessCondition::Hit:
            out.commands = {column};
            break;
        case AccessCondition::Miss:
            out.commands = {Command::ACT, column};
            out.pre_data_cycles = timing.rcd;
            break;
        case AccessCondition::Conflict:
            out.commands = {Command::PRE, Command::ACT, column};
            out.pre_data_cycles = std::uint64_t{timing.rp} + timing.rcd;
            break;
    }
    out.cycles = out.pre_data_cycles + timing.column_access();
    state.open(addr);
    return out;
}

// ---------------------------------------------------------------------------

void AccessTrace::append(const CommandRecord& record) {
    if (record.command == Command::RD || record.command == Command::WR) {
        if (!record.condition) {
            throw ConsistencyError("trace: column command without access condition");
        }
        switch (*record.condition) {
            case AccessCondition::Hit: ++counts_.hits; break;
            case AccessCondition::Miss: ++counts_.misses; break;
            case AccessCondition::Conflict: ++counts_.conflicts; break;
        }
    }
    records_.push_back(record);
}

void AccessTrace::verify() const {
    AccessCounts recount;
    std::vector<std::optional<OpenRow>> activated(geom_.bank_count());
    for (const auto& r : records_) {
        check_address(r.address, geom_);
        auto& bank = activated[bank_index(r.address, geom_)];
        const OpenRow row{r.address.su, r.address.ro};
        switch (r.command) {
            case Command::PRE: bank.reset(); break;
            case Command::ACT: bank = row; break;
            case Command::RD:
            case Command::WR:
                if (!r.condition) throw ConsistencyError("trace: column command without condition");
                if (*r.condition == AccessCondition::Hit) {
                    ++recount.hits;
                } else {
                    *r.condition == AccessCondition::Miss ? ++recount.misses : ++recount.conflicts;
                    if (!bank || !(*bank == row)) {
                        throw ConsistencyError("trace: non-hit access at cycle " +
                                               std::to_string(r.cycle) +
                                               " not preceded by an ACT of its row");
                    }
                }
                break;
        }
    }
    if (!(recount == counts_)) throw ConsistencyError("trace: counters disagree with records");
}

// ---------------------------------------------------------------------------

BurstScheduler::BurstScheduler(const DramGeometry& geom, const CycleTiming& timing,
                               std::uint32_t n_burst_banks)
    : geom_(geom), timing_(timing), n_burst_(n_burst_banks) {
    geom_.validate();
    if (n_burst_ == 0) throw ParameterError("scheduler: n_burst_banks must be >= 1");
    banks_.resize(geom_.bank_count());
}

RequestSchedule BurstScheduler::schedule(AccessCondition condition, const DramAddress& addr) {
    check_address(addr, geom_);
    auto& bank = banks_[bank_index(addr, geom_)];
    RequestSchedule out;

    std::uint64_t t0 = last_issue_ ? *last_issue_ + 1 : 0;
    std::uint64_t first = 0;
    if (condition != AccessCondition::Hit) {
        if (openings_.size() == n_burst_) {
            t0 = std::max(t0, openings_.front());
            openings_.pop_front();
        }
        std::uint64_t t = std::max(t0, bank.busy_until);
        if (condition == AccessCondition::Conflict) {
            if (bank.last_act) t = std::max(t, *bank.last_act + timing_.ras);
            out.pre = t;
            t += timing_.rp;
        }
        out.act = t;
        first = out.pre.value_or(t);
        bank.last_act = t;
        bank.row_ready = t + timing_.rcd;
    }

    const std::uint64_t bus_slot = bus_free_ > timing_.cl ? bus_free_ - timing_.cl : 0;
    out.column = std::max({t0, bank.row_ready, bus_slot});
    if (condition == AccessCondition::Hit) first = out.column;
    out.data_end = out.column + timing_.cl + timing_.burst;

    bus_free_ = out.data_end;
    bank.busy_until = out.data_end;
    if (condition != AccessCondition::Hit) openings_.push_back(out.data_end);
    last_issue_ = first;
    total_ = std::max(total_, out.data_end);
    return out;
}

std::uint64_t burst_cycles(const AccessTrace& trace, const CycleTiming& timing,
                           std::uint32_t n_burst_banks) {
    BurstScheduler sched(trace.geometry(), timing, n_burst_banks);
    for (const auto& r : trace.records()) {
        if (r.command == Command::RD || r.command == Command::WR) {
            sched.schedule(*r.condition, r.address);
        }
    }
    return sched.total_cycles();
}

DramSimulator::DramSimulator(const DramGeometry& geom, const CycleTiming& timing,
                             std::uint32_t n_burst_banks)
    : geom_(geom), timing_(timing), state_(geom), scheduler_(geom, timing, n_burst_banks),
      trace_(geom) {}

AccessCondition DramSimulator::access(const DramAddress& addr, AccessKind kind) {
    const AccessOutcome outcome = issue_access(state_, addr, kind, timing_);
    const RequestSchedule when = scheduler_.schedule(outcome.condition, addr);
    for (Command c : outcome.commands) {
        CommandRecord rec{0, c, addr, std::nullopt};
        switch (c) {
            case Command::PRE: rec.cycle = *when.pre; break;
            case Command::ACT: rec.cycle = *when.act; break;
            default:
                rec.cycle = when.column;
                rec.condition = outcome.condition;
                break;
        }
        trace_.append(rec);
    }
    return outcome.condition;
}

// ---------------------------------------------------------------------------

void write_trace_csv(std::ostream& os, const AccessTrace& trace) {
    os << "cycle,command,ch,ra,cp,ba,su,ro,co,condition\n";
    for (const auto& r : trace.records()) {
        const auto& a = r.address;
        os << r.cycle << ',' << to_string(r.command) << ',' << a.ch << ',' << a.ra << ',' << a.cp
           << ',' << a.ba << ',' << a.su << ',' << a.ro << ',' << a.co << ',';
        if (r.condition) os << to_string(*r.condition);
        os << '\n';
    }
}

AccessTrace read_trace_csv(std::istream& is, const DramGeometry& geom) {
    AccessTrace trace(geom);
    std::string line;
    if (!std::getline(is, line)) throw IoError("trace csv: missing header");
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != 10) {
            throw IoError("trace csv: line " + std::to_string(line_no) + " has " +
                          std::to_string(cells.size()) + " fields, expected 10");
        }
        try {
            CommandRecord rec;
            rec.cycle = std::stoull(cells[0]);
            const auto cmd = parse_command(cells[1]);
            if (!cmd) throw IoError("bad command '" + cells[1] + "'");
            rec.command = *cmd;
            rec.address = DramAddress{
                static_cast<std::uint32_t>(std::stoul(cells[2])),
                static_cast<std::uint32_t>(std::stoul(cells[3])),
                static_cast<std::uint32_t>(std::stoul(cells[4])),
                static_cast<std::uint32_t>(std::stoul(cells[5])),
                static_cast<std::uint32_t>(std::stoul(cells[6])),
                static_cast<std::uint32_t>(std::stoul(cells[7])),
                static_cast<std::uint32_t>(std::stoul(cells[8])),
            };
            check_address(rec.address, geom);
            if (!cells[9].empty()) {
                rec.condition = parse_condition(cells[9]);
                if (!rec.condition) throw IoError("bad condition '" + cells[9] + "'");
            }
            trace.append(rec);
        } catch (const std::logic_error& e) {
            throw IoError("trace csv: line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw IoError("trace csv: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

}  // namespace axdram
