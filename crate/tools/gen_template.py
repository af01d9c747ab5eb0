#!/usr/bin/env python3
"""Generate the synthetic GYMLGS two-sheet template used by the tests.

Builds one ideal beta strand from internal coordinates, orients it so the
strand runs along z with side chains alternating along y, then places the
antiparallel chain B (2-fold about y) one lattice period (18.15 A) along x.
Chains G and H are the images of A and B under the 2-fold screw
(x, -y, -z) + (9.075, 4.7765, 0).

Usage: python3 tools/gen_template.py > crates/core/data/gymlgs_template.pdb
"""
import math
import sys

import numpy as np

SEQ = ["GLY", "TYR", "MET", "LEU", "GLY", "SER"]
PHI, PSI, OMEGA = -120.0, 115.0, 180.0
SCREW_T = np.array([9.075, 4.7765, 0.0])
SCREW_R = np.diag([1.0, -1.0, -1.0])
PERIOD_X = 18.15

# (name, element, parent3, bond, angle, torsion) built by NeRF from the
# three named reference atoms.
SIDE_CHAINS = {
    "TYR": [
        ("CG", "C", ("N", "CA", "CB"), 1.510, 113.8, -60.0),
        ("CD1", "C", ("CA", "CB", "CG"), 1.390, 120.9, 90.0),
        ("CD2", "C", ("CA", "CB", "CG"), 1.390, 120.9, -90.0),
        ("CE1", "C", ("CB", "CG", "CD1"), 1.390, 121.2, 180.0),
        ("CE2", "C", ("CB", "CG", "CD2"), 1.390, 121.2, 180.0),
        ("CZ", "C", ("CG", "CD1", "CE1"), 1.390, 119.8, 0.0),
        ("OH", "O", ("CD1", "CE1", "CZ"), 1.380, 119.8, 180.0),
    ],
    "MET": [
        ("CG", "C", ("N", "CA", "CB"), 1.520, 114.0, -65.0),
        ("SD", "S", ("CA", "CB", "CG"), 1.810, 112.7, 180.0),
        ("CE", "C", ("CB", "CG", "SD"), 1.790, 100.8, 70.0),
    ],
    "LEU": [
        ("CG", "C", ("N", "CA", "CB"), 1.530, 116.3, -60.0),
        ("CD1", "C", ("CA", "CB", "CG"), 1.524, 110.7, 175.0),
        ("CD2", "C", ("CA", "CB", "CG"), 1.525, 110.7, -65.0),
    ],
    "SER": [
        ("OG", "O", ("N", "CA", "CB"), 1.417, 111.1, 65.0),
    ],
}


def nerf(a, b, c, bond, angle, torsion):
    angle, torsion = math.radians(angle), math.radians(torsion)
    bc = c - b
    bc /= np.linalg.norm(bc)
    n = np.cross(b - a, bc)
    n /= np.linalg.norm(n)
    m = np.cross(n, bc)
    d2 = np.array(
        [
            -bond * math.cos(angle),
            bond * math.sin(angle) * math.cos(torsion),
            bond * math.sin(angle) * math.sin(torsion),
        ]
    )
    return c + d2[0] * bc + d2[1] * m + d2[2] * n


def ideal_cb(n, ca, c):
    b = ca - n
    cc = c - ca
    a = np.cross(b, cc)
    return -0.58273431 * a + 0.56802827 * b - 0.54067466 * cc + ca


def build_strand():
    residues = []
    n = np.array([0.0, 0.0, 0.0])
    ca = np.array([1.458, 0.0, 0.0])
    c = ca + 1.525 * np.array([-math.cos(math.radians(111.2)), math.sin(math.radians(111.2)), 0.0])
    for i, name in enumerate(SEQ):
        if i > 0:
            prev = residues[-1]
            n = nerf(prev["N"], prev["CA"], prev["C"], 1.329, 116.2, PSI)
            ca = nerf(prev["CA"], prev["C"], n, 1.458, 121.7, OMEGA)
            c = nerf(prev["C"], n, ca, 1.525, 111.2, PHI)
        residues.append({"N": n, "CA": ca, "C": c})
    for i, r in enumerate(residues):
        if i + 1 < len(residues):
            nxt = residues[i + 1]["N"]
            r["O"] = nerf(nxt, r["CA"], r["C"], 1.231, 120.5, 180.0)
        else:
            r["O"] = nerf(r["N"], r["CA"], r["C"], 1.231, 120.5, PSI + 180.0)
    atoms = []
    for i, (name, r) in enumerate(zip(SEQ, residues)):
        res = [("N", "N", r["N"]), ("CA", "C", r["CA"]), ("C", "C", r["C"]), ("O", "O", r["O"])]
        if name != "GLY":
            pos = dict(r)
            pos["CB"] = ideal_cb(r["N"], r["CA"], r["C"])
            res.append(("CB", "C", pos["CB"]))
            for an, el, refs, bond, ang, tor in SIDE_CHAINS[name]:
                p = nerf(pos[refs[0]], pos[refs[1]], pos[refs[2]], bond, ang, tor)
                pos[an] = p
                res.append((an, el, p))
        atoms.append((name, res))
    return atoms


def orient(strand):
    cas = np.array([dict((a, p) for a, _, p in res)["CA"] for _, res in strand])
    axis = cas[-1] - cas[0]
    axis /= np.linalg.norm(axis)
    # side-chain direction: alternating CA offsets from the axis line
    centre = cas.mean(axis=0)
    alt = sum(((-1) ** k) * (cas[k] - centre) for k in range(len(cas)))
    alt -= axis * np.dot(alt, axis)
    alt /= np.linalg.norm(alt)
    xdir = np.cross(alt, axis)
    rot = np.array([xdir, alt, axis])
    out = []
    for name, res in strand:
        out.append((name, [(a, e, rot @ p) for a, e, p in res]))
    return out


def cb(strand, k):
    return dict((a, p) for a, _, p in strand[k - 1][1])["CB"]


def shift(strand, t):
    return [(n, [(a, e, p + t) for a, e, p in res]) for n, res in strand]


def apply(strand, r, t):
    return [(n, [(a, e, r @ p + t) for a, e, p in res]) for n, res in strand]


def place_a():
    s = orient(build_strand())
    # proper 2-fold flips until CB3 sits above CB4 (+y) and leans toward +x,
    # so the A3/G4 side chains tilt toward each other across the interface
    if cb(s, 3)[1] < cb(s, 4)[1]:
        s = apply(s, np.diag([1.0, -1.0, -1.0]), np.zeros(3))
    if cb(s, 3)[0] < cb(s, 4)[0]:
        s = apply(s, np.diag([-1.0, 1.0, -1.0]), np.zeros(3))
    c3, c4 = cb(s, 3), cb(s, 4)
    t = np.array([-c3[0], (SCREW_T[1] - c3[1] - c4[1]) / 2.0, -(c3[2] + c4[2]) / 2.0])
    return shift(s, t)


def chains():
    a = place_a()
    # antiparallel partner: 2-fold about y, one lattice period along x
    b = apply(a, np.diag([-1.0, 1.0, -1.0]), np.array([PERIOD_X, 0.0, 0.0]))
    g = apply(a, SCREW_R, SCREW_T)
    h = apply(b, SCREW_R, SCREW_T)
    return {"A": a, "B": b, "G": g, "H": h}


def pdb_name(name, element):
    if len(element) == 1 and len(name) < 4:
        return " " + name.ljust(3)
    return name.ljust(4)


def write(ch, out):
    out.write("HEADER    SYNTHETIC STERIC ZIPPER TEMPLATE\n")
    out.write("REMARK   1 GYMLGS HEXAPEPTIDE, IDEAL BETA STRANDS, 2(1) SCREW ALONG X\n")
    serial = 1
    for cid in "ABGH":
        for k, (rn, res) in enumerate(ch[cid]):
            for an, el, p in res:
                out.write(
                    "ATOM  %5d %s %3s %s%4d    %8.3f%8.3f%8.3f%6.2f%6.2f          %2s\n"
                    % (serial, pdb_name(an, el), rn, cid, 127 + k, p[0], p[1], p[2], 1.0, 10.0, el)
                )
                serial += 1
        out.write("TER\n")
    out.write("END\n")


if __name__ == "__main__":
    write(chains(), sys.stdout)
