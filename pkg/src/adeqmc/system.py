"""Bundles the generation model and storage fleet behind one sampling API."""

from dataclasses import dataclass

from . import adequacy, scenario


@dataclass
class System:
    """A single-node system: thermal fleet, profile library, storage fleet."""

    thermal: scenario.ThermalFleet
    storage: adequacy.StorageFleet
    profiles: scenario.ProfileLibrary

    def sample_year(self, rng):
        return scenario.sample_margin_year(self.thermal, self.profiles, rng)

    def sample_days(self, n_days, rng):
        return scenario.sample_margin_days(self.thermal, self.profiles, n_days, rng)

    def exact_year(self, margin):
        return adequacy.evaluate_exact_year(margin, self.storage)

    def label_day(self, day):
        return adequacy.label_day(day, self.storage)

    def label_days(self, days):
        return adequacy.label_days(days, self.storage)
