"""
Data layouts for multi-component fields
=======================================

A field with ``ncomp`` values per lattice site can be stored site-major
(AoS), component-major (SoA), or as short component-major blocks of ``sal``
sites (AoSoA).  The index map is the only thing kernels need to know.
"""

import numpy as np

from gridpar.layout import AOS, SOA, AoSoA, make_layout

# A 4-site RGB field makes the three orderings easy to see.
for scheme in (AOS, SOA, AoSoA(2)):
    lay = make_layout(4, 3, scheme)
    image = [""] * lay.total
    for comp in range(3):
        for site in range(4):
            image[lay.index(comp, site)] = "rgb"[comp] + str(site)
    print(f"{str(scheme):8s}", " ".join(image))

# Padding: the site count is rounded up so every chunk of ``vvl`` sites and
# every AoSoA block is complete.  Padded slots are never touched by kernels.
lay = make_layout(10, 3, AoSoA(4), vvl=4)
print("\n10 sites, aosoa:4, vvl=4 ->", lay.nsites_padded, "padded sites,", lay.total, "doubles")
print("padding offsets:", lay.padding_indices())

# pack/unpack convert between the logical (ncomp, nsites) view and memory.
logical = np.arange(30.0).reshape(3, 10)
flat = lay.pack(logical)
assert np.array_equal(lay.unpack(flat), logical)

# The two limits of AoSoA are the familiar layouts.
assert make_layout(10, 3, AoSoA(1)) == make_layout(10, 3, AOS)
soa = make_layout(10, 3, SOA)
assert make_layout(10, 3, AoSoA(soa.nsites_padded)) == soa
print("aosoa:1 == aos and aosoa:<nsites> == soa")
