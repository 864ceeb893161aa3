#!/usr/bin/env python3
"""Writes sessions.jsonl and prefixes.csv next to this script.

Meta sessions: factors up to 45 (61290 / 1362), durations with median 51 s
and maximum 206 s. Other providers add noise with the same SCID space.
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
INITIAL = 1362
T0 = 1_700_000_000_000_000

PROVIDERS = {
    "Meta": ("157.240.", [(5, 12), (5, 30), (10, 44), (28, 51), (28, 77), (40, 140), (45, 206)]),
    "Google": ("142.250.", [(3, 2), (3, 3), (3, 5)]),
    "Cloudflare": ("104.16.", [(2, 1), (2, 1)]),
    None: ("198.51.", [(4, 20)]),
}


def records():
    out = []
    for provider, (net, sessions) in PROVIDERS.items():
        for n, (factor, duration) in enumerate(sessions):
            total = factor * INITIAL
            sizes = []
            while total > 0:
                s = min(1252, total)
                sizes.append(s)
                total -= s
            start = T0 + n * 1_000_000_000
            step = duration * 1_000_000 // (len(sizes) - 1) if len(sizes) > 1 else 0
            scid = "%02x%02x" % (n, len(provider or "x")) + "c0ffee00"
            for i, size in enumerate(sizes):
                t = start + i * step if i < len(sizes) - 1 else start + duration * 1_000_000
                out.append({
                    "src_ip": net + "%d.%d" % (n + 1, i % 200 + 1),
                    "dst_ip": "203.0.113.%d" % (n + 1),
                    "time_us": t,
                    "udp_len": size,
                    "scid": scid,
                })
    out.sort(key=lambda r: (r["time_us"], r["src_ip"]))
    return out


def main():
    with open(os.path.join(HERE, "sessions.jsonl"), "w") as f:
        for r in records():
            f.write(json.dumps(r, separators=(",", ":")) + "\n")
    with open(os.path.join(HERE, "prefixes.csv"), "w") as f:
        f.write("prefix,provider\n157.240.0.0/16,Meta\n142.250.0.0/15,Google\n104.16.0.0/13,Cloudflare\n")


if __name__ == "__main__":
    main()
