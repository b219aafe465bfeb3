fn main() {
    // LAPACK and CBLAS symbols come from the system OpenBLAS.
    println!("cargo:rustc-link-lib=openblas");
}
