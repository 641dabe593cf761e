# helios - Data ingestion and dataset preparation
# MIT License

from helios.data.schema import (
    ChannelSchema, load_schema, CANONICAL_CHANNELS, DEFAULT_UNITS, POWER_CHANNEL
)
from helios.data.frame import (
    TimeSeriesFrame, JoinReport, ingest_csv, resample_mean, align_join, drop_missing
)
from helios.data.binning import BinningScheme, fit_bins, assign_label, assign_labels
from helios.data.dataset import (
    Standardizer, LabeledDataset, PreparedDomain,
    fit_standardizer, apply_standardizer, split_chronological, split_sizes,
    default_feature_names, prepare_domain,
    save_dataset, load_dataset, save_splits, load_splits,
)

__all__ = [
    'ChannelSchema', 'load_schema', 'CANONICAL_CHANNELS', 'DEFAULT_UNITS', 'POWER_CHANNEL',
    'TimeSeriesFrame', 'JoinReport', 'ingest_csv', 'resample_mean', 'align_join', 'drop_missing',
    'BinningScheme', 'fit_bins', 'assign_label', 'assign_labels',
    'Standardizer', 'LabeledDataset', 'PreparedDomain',
    'fit_standardizer', 'apply_standardizer', 'split_chronological', 'split_sizes',
    'default_feature_names', 'prepare_domain',
    'save_dataset', 'load_dataset', 'save_splits', 'load_splits',
]
