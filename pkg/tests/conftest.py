import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from util import mild_expand_policy, write_bases  # noqa: E402

from contrastiq import dataset as ds  # noqa: E402
from contrastiq import synthdata  # noqa: E402

E2E_GAMMAS = [1.0, 1.28, 1.65, 2.2, 3.0]


def build_synthetic_run(tmp_path, augment_copies=19, split_seed=11, gammas=E2E_GAMMAS):
    """3 textured bases x 5 gamma levels (+ augmented copies), split 80/20."""
    bases = write_bases(tmp_path / "bases")
    spec = synthdata.SynthSpec(
        base_images=bases,
        levels=[synthdata.Distortion(synthdata.GAMMA, g) for g in gammas],
        seed=7,
        output_dir=str(tmp_path / "ds"),
        augment_copies=augment_copies,
        augment_policy=mild_expand_policy(),
    )
    manifest = synthdata.generate_dataset(spec)
    manifest = ds.split(manifest, 0.8, seed=split_seed)
    return spec, manifest
