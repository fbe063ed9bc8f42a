fn main() {
    // LAPACK and BLAS come from the system OpenBLAS
    println!("cargo:rustc-link-lib=openblas");
}
