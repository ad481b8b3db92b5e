export { WeightArchive } from "./archive";
export {
  DEFAULT_SEED,
  EFFNET_CONFIGS,
  exportFeatureCache,
  exportFixture,
  exportWeights,
  fixtureImage,
  loadManifest,
  manifestDigest,
  pythonFloatRepr,
  verifyFolding,
} from "./export";
export { SeededRng, mix64 } from "./rng";
export { evalTransform, loadPng, resizeBilinear } from "./transform";
export {
  B0,
  NANO,
  configJson,
  effnetForward,
  foldBatchNorm,
  mobilenetV2Forward,
  resnet18Forward,
  seedEffnetParams,
  seedMobilenetV2Params,
  seedResnet18Params,
} from "./zoo";
