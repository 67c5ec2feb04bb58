import { PNG } from "pngjs";

export interface RgbImage {
  width: number;
  height: number;
  data: Buffer; // RGBA, 4 bytes per pixel (alpha kept at 255)
}

export function decodePng(bytes: Buffer): RgbImage {
  const png = PNG.sync.read(bytes);
  return { width: png.width, height: png.height, data: png.data };
}

export function encodePng(image: RgbImage): Buffer {
  const png = new PNG({ width: image.width, height: image.height });
  image.data.copy(png.data);
  return PNG.sync.write(png);
}

export function clonePixels(image: RgbImage): RgbImage {
  return { width: image.width, height: image.height, data: Buffer.from(image.data) };
}

export function setPixel(image: RgbImage, x: number, y: number, rgb: [number, number, number]): void {
  if (x < 0 || y < 0 || x >= image.width || y >= image.height) return;
  const offset = (y * image.width + x) * 4;
  image.data[offset] = rgb[0];
  image.data[offset + 1] = rgb[1];
  image.data[offset + 2] = rgb[2];
  image.data[offset + 3] = 255;
}

export function getPixel(image: RgbImage, x: number, y: number): [number, number, number] {
  const offset = (y * image.width + x) * 4;
  return [image.data[offset], image.data[offset + 1], image.data[offset + 2]];
}

/** One-pixel-wide rectangle outline; box edges are exclusive right/bottom. */
export function drawBoxOutline(
  image: RgbImage,
  box: [number, number, number, number],
  rgb: [number, number, number],
): void {
  const [left, top, right, bottom] = box;
  for (let x = left; x < right; x++) {
    setPixel(image, x, top, rgb);
    setPixel(image, x, bottom - 1, rgb);
  }
  for (let y = top; y < bottom; y++) {
    setPixel(image, left, y, rgb);
    setPixel(image, right - 1, y, rgb);
  }
}

export function grayImage(width: number, height: number, valueAt: (x: number, y: number) => number): RgbImage {
  const data = Buffer.alloc(width * height * 4);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const offset = (y * width + x) * 4;
      const v = valueAt(x, y);
      data[offset] = v;
      data[offset + 1] = v;
      data[offset + 2] = v;
      data[offset + 3] = 255;
    }
  }
  return { width, height, data };
}
