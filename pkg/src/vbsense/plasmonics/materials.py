"""Optical constants at the emission (810 nm) and excitation (532 nm) wavelengths.

Permittivities use the exp(-i w t) convention: absorbing media have
Im(eps) > 0. Gold values are representative of the Johnson-Christy data
set; hBN and sapphire are treated as lossless with in-plane and ordinary
indices respectively. All values may be overridden through the config file.
"""

from types import MappingProxyType

GOLD_PERMITTIVITY = MappingProxyType({
    532.0: complex(-4.68, 2.41),
    810.0: complex(-24.8, 1.5),
})
HBN_INDEX = MappingProxyType({532.0: 2.17, 810.0: 2.10})
SAPPHIRE_INDEX = MappingProxyType({532.0: 1.77, 810.0: 1.76})

EMISSION_WAVELENGTH_NM = 810.0
EXCITATION_WAVELENGTH_NM = 532.0


def lookup(table, wavelength_nm, name="material"):
    """Tabulated value at ``wavelength_nm`` (exact match within 0.5 nm)."""
    for wl, value in table.items():
        if abs(wl - float(wavelength_nm)) <= 0.5:
            return value
    known = ", ".join(f"{wl:g}" for wl in table)
    raise KeyError(f"no {name} data at {wavelength_nm:g} nm (tabulated: {known} nm)")
