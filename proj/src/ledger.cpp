#include <lcpsim/ledger.h>

#include <openssl/evp.h>

#include <algorithm>
#include <memory>

namespace lcpsim {

namespace {

constexpr char hexDigits[] = "0123456789abcdef";
constexpr std::string_view ledgerTag = "lcpsim.ledger.v1";

class Sha256
{
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free)
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("SHA-256 initialisation failed");
    }

    void
    update(void const* data, std::size_t len)
    {
        EVP_DigestUpdate(ctx_.get(), data, len);
    }

    void
    u8(std::uint8_t v)
    {
        update(&v, 1);
    }

    void
    u32(std::uint32_t v)
    {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i)
            b[i] = static_cast<std::uint8_t>(v >> (8 * (3 - i)));
        update(b, 4);
    }

    void
    u64(std::uint64_t v)
    {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i)
            b[i] = static_cast<std::uint8_t>(v >> (8 * (7 - i)));
        update(b, 8);
    }

    Digest
    finish()
    {
        Digest d;
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), d.bytes.data(), &len);
        return d;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string
Digest::hex() const
{
    std::string out;
    out.reserve(64);
    for (auto b : bytes)
    {
        out.push_back(hexDigits[b >> 4]);
        out.push_back(hexDigits[b & 0xf]);
    }
    return out;
}

std::string
Digest::shortHex() const
{
    return hex().substr(0, 8);
}

std::optional<Digest>
Digest::fromHex(std::string_view text)
{
    if (text.size() != 64)
        return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        if (c >= 'A' && c <= 'F')
            return c - 'A' + 10;
        return -1;
    };
    Digest d;
    for (std::size_t i = 0; i < 32; ++i)
    {
        int const hi = nibble(text[2 * i]);
        int const lo = nibble(text[2 * i + 1]);
        if (hi < 0 || lo < 0)
            return std::nullopt;
        d.bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return d;
}

TxSet::TxSet(std::initializer_list<TxId> txs) : TxSet(std::vector<TxId>(txs))
{
}

TxSet::TxSet(std::vector<TxId> txs) : txs_(std::move(txs))
{
    std::sort(txs_.begin(), txs_.end());
    txs_.erase(std::unique(txs_.begin(), txs_.end()), txs_.end());
}

bool
TxSet::contains(TxId const& tx) const
{
    return std::binary_search(txs_.begin(), txs_.end(), tx);
}

void
TxSet::insert(TxId tx)
{
    auto it = std::lower_bound(txs_.begin(), txs_.end(), tx);
    if (it == txs_.end() || *it != tx)
        txs_.insert(it, std::move(tx));
}

void
TxSet::erase(TxId const& tx)
{
    auto it = std::lower_bound(txs_.begin(), txs_.end(), tx);
    if (it != txs_.end() && *it == tx)
        txs_.erase(it);
}

Digest
ledgerDigest(std::optional<Digest> const& parent, std::uint64_t seq, TxSet const& txs)
{
    Sha256 h;
    h.update(ledgerTag.data(), ledgerTag.size());
    if (parent)
    {
        h.u8(1);
        h.update(parent->bytes.data(), parent->bytes.size());
    }
    else
    {
        h.u8(0);
    }
    h.u64(seq);
    h.u32(static_cast<std::uint32_t>(txs.size()));
    for (auto const& tx : txs)
    {
        h.u32(static_cast<std::uint32_t>(tx.id.size()));
        h.update(tx.id.data(), tx.id.size());
    }
    return h.finish();
}

Ledger const&
genesis()
{
    static Ledger const g = [] {
        Ledger l;
        l.seq = 1;
        l.hash = ledgerDigest(std::nullopt, 1, l.txs);
        return l;
    }();
    return g;
}

LedgerStore::LedgerStore()
{
    entries_.emplace(lcpsim::genesis().hash, Entry{lcpsim::genesis(), {}, {}});
}

Ledger const&
LedgerStore::genesis() const
{
    return lcpsim::genesis();
}

LedgerStore::Entry const&
LedgerStore::entry(Digest const& d) const
{
    auto it = entries_.find(d);
    if (it == entries_.end())
        throw UnknownLedger("unknown ledger " + d.shortHex());
    return it->second;
}

Ledger const&
LedgerStore::get(Digest const& d) const
{
    return entry(d).ledger;
}

Ledger const*
LedgerStore::find(Digest const& d) const
{
    auto it = entries_.find(d);
    return it == entries_.end() ? nullptr : &it->second.ledger;
}

Ledger const&
LedgerStore::apply(Digest const& parent, TxSet const& txs)
{
    auto const& p = entry(parent);
    auto const seq = p.ledger.seq + 1;
    auto const hash = ledgerDigest(parent, seq, txs);
    if (auto it = entries_.find(hash); it != entries_.end())
    {
        auto const& existing = it->second.ledger;
        if (existing.parent != parent || existing.seq != seq ||
            !(existing.txs == txs))
            throw std::logic_error("ledger digest collision at " + hash.hex());
        return existing;
    }

    Entry e;
    e.ledger.hash = hash;
    e.ledger.parent = parent;
    e.ledger.seq = seq;
    e.ledger.txs = txs;
    e.ancestors = p.ancestors;
    e.ancestors.push_back(parent);

    auto [it, inserted] = entries_.emplace(hash, std::move(e));
    entries_.at(parent).children.push_back(hash);
    return it->second.ledger;
}

bool
LedgerStore::isAncestor(Digest const& a, Digest const& b) const
{
    auto const& ea = entry(a);
    auto const& eb = entry(b);
    if (ea.ledger.seq >= eb.ledger.seq)
        return false;
    return eb.ancestors[ea.ledger.seq - 1] == a;
}

std::optional<Digest>
LedgerStore::ancestorAt(Digest const& d, std::uint64_t s) const
{
    auto const& e = entry(d);
    if (s == 0 || s > e.ledger.seq)
        return std::nullopt;
    if (s == e.ledger.seq)
        return d;
    return e.ancestors[s - 1];
}

Ledger const&
LedgerStore::commonAncestor(std::vector<Digest> const& ledgers) const
{
    if (ledgers.empty())
        throw std::invalid_argument("common ancestor of an empty set");

    std::uint64_t lo = 1;
    std::uint64_t hi = entry(ledgers.front()).ledger.seq;
    for (auto const& d : ledgers)
        hi = std::min(hi, entry(d).ledger.seq);

    auto agree = [&](std::uint64_t s) {
        auto const first = *ancestorAt(ledgers.front(), s);
        for (auto const& d : ledgers)
            if (*ancestorAt(d, s) != first)
                return false;
        return true;
    };

    // Agreement at s implies agreement below s; find the largest agreeing s.
    while (lo < hi)
    {
        auto const mid = lo + (hi - lo + 1) / 2;
        if (agree(mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    return get(*ancestorAt(ledgers.front(), lo));
}

std::vector<Digest> const&
LedgerStore::children(Digest const& d) const
{
    return entry(d).children;
}

bool
LedgerStore::chainContains(Digest const& d, TxId const& tx) const
{
    auto const& e = entry(d);
    if (e.ledger.txs.contains(tx))
        return true;
    for (auto const& a : e.ancestors)
        if (get(a).txs.contains(tx))
            return true;
    return false;
}

TxSet
LedgerStore::withoutApplied(
    Digest const& d,
    TxSet candidates,
    std::optional<Digest> const& known) const
{
    auto const& e = entry(d);
    std::uint64_t floor = 0;
    if (known && isAncestorOrSelf(*known, d))
        floor = get(*known).seq;

    auto strip = [&](Ledger const& l) {
        for (auto const& tx : l.txs)
            candidates.erase(tx);
    };
    if (e.ledger.seq > floor)
        strip(e.ledger);
    for (std::uint64_t s = e.ledger.seq - 1; s > floor && !candidates.empty(); --s)
        strip(get(e.ancestors[s - 1]));
    return candidates;
}

std::vector<Ledger const*>
LedgerStore::ordered() const
{
    std::vector<Ledger const*> out;
    out.reserve(entries_.size());
    for (auto const& [d, e] : entries_)
        out.push_back(&e.ledger);
    std::sort(out.begin(), out.end(), [](Ledger const* a, Ledger const* b) {
        if (a->seq != b->seq)
            return a->seq < b->seq;
        return a->hash < b->hash;
    });
    return out;
}

}  // namespace lcpsim
