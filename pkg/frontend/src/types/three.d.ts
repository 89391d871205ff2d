/**
 * Minimal ambient declarations for the subset of three.js used here. The
 * runtime package ships without type definitions in this environment; this
 * keeps the renderer typechecked without pulling in the full community types.
 */
declare module "three" {
  export class Matrix4 {
    fromArray(array: ArrayLike<number>): this;
  }

  export class Scene {
    add(...objects: object[]): this;
  }

  export class PerspectiveCamera {
    constructor(fov: number, aspect: number, near: number, far: number);
    position: { set(x: number, y: number, z: number): void };
  }

  export class BufferAttribute {
    constructor(array: ArrayLike<number>, itemSize: number);
  }

  export class BufferGeometry {
    setAttribute(name: string, attribute: BufferAttribute): this;
    setIndex(attribute: BufferAttribute): this;
  }

  export class CircleGeometry extends BufferGeometry {
    constructor(radius: number, segments: number);
    rotateX(angle: number): this;
  }

  export class Mesh {
    constructor(geometry: BufferGeometry, material: object);
  }

  export class MeshLambertMaterial {
    constructor(params: { color: number });
  }

  export class AmbientLight {
    constructor(color: number, intensity: number);
  }

  export class DirectionalLight {
    constructor(color: number, intensity: number);
  }

  export const RedFormat: number;
  export const FloatType: number;
  export const DoubleSide: number;

  export class DataTexture {
    constructor(
      data: ArrayLike<number>, width: number, height: number, format: number, type: number,
    );
    needsUpdate: boolean;
  }

  export class ShaderMaterial {
    constructor(params: {
      vertexShader: string;
      fragmentShader: string;
      uniforms: Record<string, { value: unknown }>;
      side: number;
    });
    uniforms: Record<string, { value: unknown }>;
  }

  export class InstancedMesh extends Mesh {
    constructor(geometry: BufferGeometry, material: object, count: number);
    instanceMatrix: { needsUpdate: boolean };
    setMatrixAt(index: number, matrix: Matrix4): void;
  }

  export class WebGLRenderer {
    constructor(params: { canvas: HTMLCanvasElement; antialias?: boolean });
    render(scene: Scene, camera: PerspectiveCamera): void;
  }
}
