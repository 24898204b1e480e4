#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lcpsim {

/** 256-bit ledger digest, ordered as unsigned big-endian bytes. */
struct Digest
{
    std::array<std::uint8_t, 32> bytes{};

    std::string
    hex() const;

    /** First 8 hex characters, for diagnostics. */
    std::string
    shortHex() const;

    static std::optional<Digest>
    fromHex(std::string_view text);

    friend auto
    operator<=>(Digest const&, Digest const&) = default;
};

struct DigestHash
{
    std::size_t
    operator()(Digest const& d) const noexcept
    {
        std::size_t h = 0;
        for (int i = 0; i < 8; ++i)
            h = (h << 8) | d.bytes[i];
        return h;
    }
};

/** Transaction identity. Transactions carry no payload. */
struct TxId
{
    std::string id;

    TxId() = default;
    TxId(std::string s) : id(std::move(s))
    {
    }
    TxId(char const* s) : id(s)
    {
    }

    // std::string compares as unsigned bytes, which is the canonical order.
    friend auto
    operator<=>(TxId const&, TxId const&) = default;
};

/** Canonically ordered, duplicate-free set of transactions. */
class TxSet
{
public:
    TxSet() = default;
    TxSet(std::initializer_list<TxId> txs);
    explicit TxSet(std::vector<TxId> txs);

    bool
    contains(TxId const& tx) const;

    void
    insert(TxId tx);

    void
    erase(TxId const& tx);

    std::size_t
    size() const
    {
        return txs_.size();
    }

    bool
    empty() const
    {
        return txs_.empty();
    }

    auto
    begin() const
    {
        return txs_.begin();
    }

    auto
    end() const
    {
        return txs_.end();
    }

    std::vector<TxId> const&
    items() const
    {
        return txs_;
    }

    friend bool
    operator==(TxSet const&, TxSet const&) = default;

private:
    std::vector<TxId> txs_;
};

struct Ledger
{
    Digest hash;
    std::optional<Digest> parent;
    std::uint64_t seq = 1;
    TxSet txs;
};

/**
 * Digest of (parent, seq, txs) under a domain-separated canonical encoding:
 * tag, presence byte plus parent digest, big-endian u64 seq, big-endian u32
 * count, then each tx id as big-endian u32 length and raw bytes. SHA-256.
 */
Digest
ledgerDigest(std::optional<Digest> const& parent, std::uint64_t seq, TxSet const& txs);

/** The unique genesis ledger: seq 1, no parent, no transactions. */
Ledger const&
genesis();

/** phi(a, b) = 1 iff a's hash is greater than b's. */
inline int
phi(Ledger const& a, Ledger const& b)
{
    return a.hash > b.hash ? 1 : 0;
}

class UnknownLedger : public std::out_of_range
{
public:
    using std::out_of_range::out_of_range;
};

/**
 * Append-only ledger DAG. Closed under parents; every stored ledger also
 * records its ancestor digests indexed by sequence for O(1) ancestry tests.
 */
class LedgerStore
{
public:
    LedgerStore();

    Ledger const&
    genesis() const;

    bool
    contains(Digest const& d) const
    {
        return entries_.count(d) != 0;
    }

    Ledger const&
    get(Digest const& d) const;

    Ledger const*
    find(Digest const& d) const;

    /** Child of parent with the given transactions. Idempotent. */
    Ledger const&
    apply(Digest const& parent, TxSet const& txs);

    /** True iff a is a strict ancestor of b. */
    bool
    isAncestor(Digest const& a, Digest const& b) const;

    bool
    isAncestorOrSelf(Digest const& a, Digest const& b) const
    {
        return a == b || isAncestor(a, b);
    }

    /** The ancestor-or-self of d with sequence s; none if s > seq(d). */
    std::optional<Digest>
    ancestorAt(Digest const& d, std::uint64_t s) const;

    /** Deepest ledger that is an ancestor-or-self of every input. */
    Ledger const&
    commonAncestor(std::vector<Digest> const& ledgers) const;

    std::vector<Digest> const&
    children(Digest const& d) const;

    /** True iff tx was applied by d or one of its ancestors. */
    bool
    chainContains(Digest const& d, TxId const& tx) const;

    /**
     * candidates minus every tx applied on the chain ending at d. When
     * `known` is an ancestor-or-self of d whose chain was already removed
     * from candidates, the walk stops there.
     */
    TxSet
    withoutApplied(
        Digest const& d,
        TxSet candidates,
        std::optional<Digest> const& known = std::nullopt) const;

    std::size_t
    size() const
    {
        return entries_.size();
    }

    /** All ledgers ordered by (seq, hash). */
    std::vector<Ledger const*>
    ordered() const;

private:
    struct Entry
    {
        Ledger ledger;
        std::vector<Digest> ancestors;  // ancestors[s-1] for s < seq
        std::vector<Digest> children;
    };

    Entry const&
    entry(Digest const& d) const;

    std::unordered_map<Digest, Entry, DigestHash> entries_;
};

}  // namespace lcpsim
